//! Hilbert–Schmidt contractivity violations.
//!
//! For a trace-preserving `Θ`, every difference of states `σ - ρ` is a
//! traceless Hermitian matrix and every traceless Hermitian `H` is
//! proportional to one (split `H` into positive and negative parts). So
//!
//! ```text
//! sup_{σ≠ρ} D_HS(Θσ, Θρ) / D_HS(σ, ρ) = sup_H ‖Θ(H)‖²_HS / ‖H‖²_HS,
//! ```
//!
//! the squared top singular value of `Θ` restricted to the real space of
//! traceless Hermitian matrices. [`exact_max_ratio`] computes it in an
//! orthonormal generalized Gell-Mann basis; [`search_violations`] explores
//! channel space around it.

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channels::{
    channel_norm, from_isometry, random_channel_from, stacked_isometry, KrausChannel, LinearMap,
};
use crate::distances::d_hs;
use crate::error::{Error, Result};
use crate::linalg::{hermitian_eig, orthonormalize_columns, ComplexMatrix, C64, ZERO};
use crate::rng::{ginibre, stream_rng, streams};
use crate::states::{validate_density, DensityMatrix};

/// Orthonormal basis (`Tr(G_a G_b) = δ_ab`) of traceless Hermitian `d × d`
/// matrices, in this order:
///
/// 1. symmetric `(E_jk + E_kj)/√2` for `j < k`, lexicographic;
/// 2. antisymmetric `(-i E_jk + i E_kj)/√2` for `j < k`, lexicographic;
/// 3. diagonal `(Σ_{m<l} E_mm - l E_ll)/√(l(l+1))` for `l = 1 .. d-1`.
pub fn gell_mann_basis(d: usize) -> Vec<ComplexMatrix> {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let mut basis = Vec::with_capacity(d * d - 1);
    let pairs: Vec<(usize, usize)> = (0..d)
        .flat_map(|j| (j + 1..d).map(move |k| (j, k)))
        .collect();
    for &(j, k) in &pairs {
        basis.push(ComplexMatrix::from_fn(d, d, |r, c| {
            if (r, c) == (j, k) || (r, c) == (k, j) {
                C64::new(s, 0.0)
            } else {
                ZERO
            }
        }));
    }
    for &(j, k) in &pairs {
        basis.push(ComplexMatrix::from_fn(d, d, |r, c| {
            if (r, c) == (j, k) {
                C64::new(0.0, -s)
            } else if (r, c) == (k, j) {
                C64::new(0.0, s)
            } else {
                ZERO
            }
        }));
    }
    for l in 1..d {
        let norm = 1.0 / ((l * (l + 1)) as f64).sqrt();
        basis.push(ComplexMatrix::from_fn(d, d, |r, c| {
            if r != c {
                ZERO
            } else if r < l {
                C64::new(norm, 0.0)
            } else if r == l {
                C64::new(-(l as f64) * norm, 0.0)
            } else {
                ZERO
            }
        }));
    }
    basis
}

/// Real matrix `R_ab = Tr(G_a Θ(G_b))` of `Θ` on traceless Hermitian
/// matrices. Rows index the output basis, columns the input basis.
pub fn traceless_restriction(channel: &KrausChannel) -> DMatrix<f64> {
    let in_basis = gell_mann_basis(channel.in_dim());
    let out_basis = gell_mann_basis(channel.out_dim());
    let images: Vec<ComplexMatrix> = in_basis.iter().map(|g| channel.apply_operator(g)).collect();
    DMatrix::from_fn(out_basis.len(), in_basis.len(), |a, b| {
        out_basis[a].hs_inner(&images[b]).re
    })
}

/// `sup_{σ≠ρ} D_HS(Θσ, Θρ) / D_HS(σ, ρ)`.
pub fn exact_max_ratio(channel: &KrausChannel) -> f64 {
    let r = traceless_restriction(channel);
    if r.nrows() == 0 || r.ncols() == 0 {
        return 0.0;
    }
    let top = r.singular_values().iter().copied().fold(0.0, f64::max);
    top * top
}

/// States realizing the worst-case ratio of a channel.
#[derive(Clone, Debug)]
pub struct StatePair {
    pub sigma: DensityMatrix,
    pub rho: DensityMatrix,
    /// `D_HS(Θσ, Θρ) / D_HS(σ, ρ)` recomputed on the returned pair.
    pub ratio: f64,
}

/// Splits the top right singular vector `H` into `H₊ - H₋` and normalizes
/// both parts to unit trace. Falls back to later singular vectors when a
/// direction does not split.
pub fn extract_state_pair(channel: &KrausChannel) -> Result<StatePair> {
    let r = traceless_restriction(channel);
    if r.ncols() == 0 {
        return Err(Error::DegenerateDirection);
    }
    let basis = gell_mann_basis(channel.in_dim());
    let svd = r.svd(false, true);
    let v_t = svd.v_t.expect("requested V^T");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));

    for idx in order {
        let n = channel.in_dim();
        let mut h = ComplexMatrix::zeros(n, n);
        for (b, g) in basis.iter().enumerate() {
            h = &h + &g.scale(v_t[(idx, b)]);
        }
        let Ok((sigma, rho)) = split_direction(&h) else {
            continue;
        };
        let before = d_hs(&sigma, &rho)?;
        let after = d_hs(&channel.apply(&sigma)?, &channel.apply(&rho)?)?;
        return Ok(StatePair {
            sigma,
            rho,
            ratio: after / before,
        });
    }
    Err(Error::DegenerateDirection)
}

fn split_direction(h: &ComplexMatrix) -> Result<(DensityMatrix, DensityMatrix)> {
    let eig = hermitian_eig(h)?;
    let pos: Vec<f64> = eig.values.iter().map(|&x| x.max(0.0)).collect();
    let neg: Vec<f64> = eig.values.iter().map(|&x| (-x).max(0.0)).collect();
    let (tp, tn) = (pos.iter().sum::<f64>(), neg.iter().sum::<f64>());
    if tp < 1e-12 || tn < 1e-12 {
        return Err(Error::DegenerateDirection);
    }
    let scaled = |w: &[f64], t: f64| w.iter().map(|x| x / t).collect::<Vec<_>>();
    let sigma = validate_density(&eig.recompose(&scaled(&pos, tp)), None)?;
    let rho = validate_density(&eig.recompose(&scaled(&neg, tn)), None)?;
    Ok((sigma, rho))
}

/// Best violation found by [`search_violations`], with everything needed to
/// re-check it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SearchReport {
    pub best_ratio: f64,
    pub channel: KrausChannel,
    pub sigma: DensityMatrix,
    pub rho: DensityMatrix,
    /// `‖Θ‖` of the reported channel.
    pub bound: f64,
    #[serde(rename = "samples")]
    pub samples_evaluated: u64,
    pub seed: u64,
    /// `(sample index, ratio)` at every improvement of the running best.
    pub history: Vec<(u64, f64)>,
}

#[derive(Clone, Debug)]
pub struct SearchConfig {
    pub dim: usize,
    pub kraus_count: usize,
    pub budget: u64,
    pub seed: u64,
    pub warm_start: Option<KrausChannel>,
}

/// Initial Gaussian perturbation scale of the hill climb.
pub const INITIAL_STEP: f64 = 0.05;
/// Consecutive rejections before the step is halved.
pub const FAILURES_BEFORE_HALVING: u32 = 20;
/// Below this step a worker restarts from a fresh random channel.
pub const MIN_STEP: f64 = 1e-4;
/// Fixed worker count; the partition of the budget, and hence the result,
/// does not depend on the thread pool.
pub const SEARCH_WORKERS: u64 = 4;

struct WorkerResult {
    best: Option<(f64, KrausChannel)>,
    history: Vec<(u64, f64)>,
}

fn perturb<R: rand::Rng + ?Sized>(channel: &KrausChannel, step: f64, rng: &mut R) -> KrausChannel {
    let iso = stacked_isometry(channel);
    let noise = ComplexMatrix::from_inner(ginibre(rng, iso.rows(), iso.cols())).scale(step);
    let q = orthonormalize_columns(&(&iso + &noise));
    from_isometry(&q, channel.in_dim(), channel.kraus().len())
}

fn run_worker(cfg: &SearchConfig, worker: u64, offset: u64, share: u64) -> WorkerResult {
    let mut rng = stream_rng(cfg.seed, streams::SEARCH + worker);
    let mut out = WorkerResult {
        best: None,
        history: Vec::new(),
    };
    if share == 0 {
        return out;
    }
    let fresh =
        |rng: &mut rand_chacha::ChaCha20Rng| random_channel_from(rng, cfg.dim, cfg.kraus_count);
    let mut current = match (&cfg.warm_start, worker) {
        (Some(w), 0) => w.clone(),
        _ => fresh(&mut rng),
    };
    let mut current_ratio = exact_max_ratio(&current);
    let mut step = INITIAL_STEP;
    let mut failures = 0;
    let record = |out: &mut WorkerResult, idx: u64, ratio: f64, ch: &KrausChannel| {
        if out.best.as_ref().is_none_or(|(b, _)| ratio > *b) {
            out.best = Some((ratio, ch.clone()));
            out.history.push((offset + idx, ratio));
        }
    };
    record(&mut out, 0, current_ratio, &current);

    for idx in 1..share {
        if step < MIN_STEP {
            current = fresh(&mut rng);
            current_ratio = exact_max_ratio(&current);
            step = INITIAL_STEP;
            failures = 0;
            record(&mut out, idx, current_ratio, &current);
            continue;
        }
        let candidate = perturb(&current, step, &mut rng);
        let ratio = exact_max_ratio(&candidate);
        if ratio > current_ratio {
            current = candidate;
            current_ratio = ratio;
            failures = 0;
            record(&mut out, idx, current_ratio, &current);
        } else {
            failures += 1;
            if failures >= FAILURES_BEFORE_HALVING {
                step *= 0.5;
                failures = 0;
            }
        }
    }
    out
}

/// Stochastic search over channels for the largest Hilbert–Schmidt
/// expansion, scored exactly per channel by [`exact_max_ratio`].
pub fn search_violations(cfg: &SearchConfig) -> Result<SearchReport> {
    if cfg.budget == 0 {
        return Err(Error::InvalidParameter("budget must be at least 1".into()));
    }
    if cfg.dim == 0 || cfg.kraus_count == 0 {
        return Err(Error::InvalidParameter(format!(
            "need dim >= 1 and k >= 1, got dim={}, k={}",
            cfg.dim, cfg.kraus_count
        )));
    }
    if let Some(w) = &cfg.warm_start {
        if w.in_dim() != cfg.dim || w.out_dim() != cfg.dim {
            return Err(Error::InvalidParameter(format!(
                "warm start acts on {}->{}, search dimension is {}",
                w.in_dim(),
                w.out_dim(),
                cfg.dim
            )));
        }
    }

    let base = cfg.budget / SEARCH_WORKERS;
    let extra = cfg.budget % SEARCH_WORKERS;
    let plan: Vec<(u64, u64, u64)> = (0..SEARCH_WORKERS)
        .scan(0u64, |offset, w| {
            let share = base + u64::from(w < extra);
            let start = *offset;
            *offset += share;
            Some((w, start, share))
        })
        .collect();
    let results: Vec<WorkerResult> = plan
        .par_iter()
        .map(|&(w, offset, share)| run_worker(cfg, w, offset, share))
        .collect();

    let mut best: Option<(f64, KrausChannel)> = None;
    let mut events = Vec::new();
    for r in results {
        if let Some((ratio, ch)) = r.best {
            if best.as_ref().is_none_or(|(b, _)| ratio > *b) {
                best = Some((ratio, ch));
            }
        }
        events.extend(r.history);
    }
    events.sort_by_key(|&(i, _)| i);
    let mut history = Vec::new();
    let mut running = f64::NEG_INFINITY;
    for (i, r) in events {
        if r > running {
            running = r;
            history.push((i, r));
        }
    }

    let (_, channel) = best.expect("budget >= 1 evaluates at least one channel");
    let pair = extract_state_pair(&channel)?;
    Ok(SearchReport {
        best_ratio: pair.ratio,
        bound: channel_norm(&channel),
        channel,
        sigma: pair.sigma,
        rho: pair.rho,
        samples_evaluated: cfg.budget,
        seed: cfg.seed,
        history,
    })
}

/// Outcome of re-checking a report from its own contents.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SearchVerification {
    pub recomputed_ratio: f64,
    pub recomputed_bound: f64,
    pub exact_ratio: f64,
    pub ratio_matches: bool,
    pub bound_matches: bool,
    pub exact_matches: bool,
    pub within_kadison_bound: bool,
}

impl SearchVerification {
    pub fn ok(&self) -> bool {
        self.ratio_matches && self.bound_matches && self.exact_matches && self.within_kadison_bound
    }
}

pub fn verify_search_report(report: &SearchReport) -> Result<SearchVerification> {
    let ch = &report.channel;
    let before = d_hs(&report.sigma, &report.rho)?;
    let after = d_hs(&ch.apply(&report.sigma)?, &ch.apply(&report.rho)?)?;
    let recomputed_ratio = after / before;
    let recomputed_bound = channel_norm(ch);
    let exact_ratio = exact_max_ratio(ch);
    Ok(SearchVerification {
        recomputed_ratio,
        recomputed_bound,
        exact_ratio,
        ratio_matches: (recomputed_ratio - report.best_ratio).abs() <= 1e-10,
        bound_matches: (recomputed_bound - report.bound).abs() <= 1e-12 * report.bound.max(1.0),
        exact_matches: (exact_ratio - report.best_ratio).abs() <= 1e-8,
        within_kadison_bound: report.best_ratio <= report.bound + 1e-9,
    })
}
