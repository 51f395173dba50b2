//! Distance-based entanglement `E_D(σ) = inf_{ρ separable} D(σ, ρ)`.
//!
//! The infimum is bracketed from both sides:
//!
//! * **upper**: an explicit separable ensemble found by multi-start
//!   alternating minimization. The ensemble is returned as a witness, and
//!   the reported value is recomputed from it, so the bound does not rely on
//!   the optimizer trajectory.
//! * **lower** (Hilbert–Schmidt only): the distance to the nearest PPT state,
//!   computed with Dykstra's alternating projections. Separable states are
//!   PPT, so this never exceeds the true value; for 2⊗2 and 2⊗3 the two sets
//!   coincide and the bracket closes.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channels::{local_product_family, new_kraus};
use crate::distances::{distance, DistanceKind};
use crate::error::{Error, Result};
use crate::linalg::{
    hermitian_eig, kron, partial_transpose, unitarity_deviation, ComplexMatrix, Dims, Subsystem,
    C64, ZERO,
};
use crate::rng::{simplex_point, stream_rng, streams, unit_vector};
use crate::states::{validate_density, DensityMatrix};

const ENSEMBLE_TOLERANCE: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnsembleTerm {
    pub p: f64,
    pub a: Vec<C64>,
    pub b: Vec<C64>,
}

/// `Σ p_k |a_k><a_k| ⊗ |b_k><b_k|` with `p` on the simplex and unit `a_k`,
/// `b_k`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "EnsembleJson", into = "EnsembleJson")]
pub struct SeparableEnsemble {
    dims: Dims,
    terms: Vec<EnsembleTerm>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct EnsembleJson {
    dims: Dims,
    terms: Vec<EnsembleTerm>,
}

impl TryFrom<EnsembleJson> for SeparableEnsemble {
    type Error = Error;
    fn try_from(j: EnsembleJson) -> Result<Self> {
        SeparableEnsemble::new(j.dims, j.terms)
    }
}

impl From<SeparableEnsemble> for EnsembleJson {
    fn from(e: SeparableEnsemble) -> Self {
        EnsembleJson {
            dims: e.dims,
            terms: e.terms,
        }
    }
}

fn norm_sqr(v: &[C64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum()
}

impl SeparableEnsemble {
    pub fn new(dims: Dims, terms: Vec<EnsembleTerm>) -> Result<Self> {
        if terms.is_empty() {
            return Err(Error::InvalidEnsemble("no terms".into()));
        }
        let mut total = 0.0;
        for (k, t) in terms.iter().enumerate() {
            if !(t.p >= 0.0) || !t.p.is_finite() {
                return Err(Error::InvalidEnsemble(format!("weight {k} is {}", t.p)));
            }
            if t.a.len() != dims.d1 || t.b.len() != dims.d2 {
                return Err(Error::InvalidEnsemble(format!(
                    "term {k} has factor lengths ({}, {}), expected ({}, {})",
                    t.a.len(),
                    t.b.len(),
                    dims.d1,
                    dims.d2
                )));
            }
            for (name, v) in [("a", &t.a), ("b", &t.b)] {
                let n = norm_sqr(v).sqrt();
                if (n - 1.0).abs() > ENSEMBLE_TOLERANCE {
                    return Err(Error::InvalidEnsemble(format!(
                        "term {k}: |{name}| = {n}, expected 1"
                    )));
                }
            }
            total += t.p;
        }
        if (total - 1.0).abs() > ENSEMBLE_TOLERANCE {
            return Err(Error::InvalidEnsemble(format!("weights sum to {total}")));
        }
        Ok(Self { dims, terms })
    }

    pub fn dims(&self) -> Dims {
        self.dims
    }

    pub fn terms(&self) -> &[EnsembleTerm] {
        &self.terms
    }
}

/// `a ⊗ b` in row-major composite order.
fn product_vector(a: &[C64], b: &[C64]) -> Vec<C64> {
    a.iter()
        .flat_map(|x| b.iter().map(move |y| x * y))
        .collect()
}

fn mixture(dims: Dims, p: &[f64], phis: &[Vec<C64>]) -> ComplexMatrix {
    let n = dims.total();
    let mut data = vec![ZERO; n * n];
    for (w, phi) in p.iter().zip(phis) {
        if *w == 0.0 {
            continue;
        }
        // column-major, entry (i, j) = φ_i conj(φ_j), i ≤ j
        for j in 0..n {
            let cj = phi[j].conj() * *w;
            for i in 0..=j {
                data[j * n + i] += phi[i] * cj;
            }
        }
    }
    for j in 0..n {
        data[j * n + j].im = 0.0;
        for i in 0..j {
            data[i * n + j] = data[j * n + i].conj();
        }
    }
    ComplexMatrix::from_columns_vec(n, n, &data)
}

/// The separable state an ensemble describes.
pub fn ensemble_to_density(e: &SeparableEnsemble) -> Result<DensityMatrix> {
    let p: Vec<f64> = e.terms.iter().map(|t| t.p).collect();
    let phis: Vec<Vec<C64>> = e.terms.iter().map(|t| product_vector(&t.a, &t.b)).collect();
    validate_density(&mixture(e.dims, &p, &phis), Some(e.dims))
}

/// Random separable ensemble: `terms` Haar product vectors with flat
/// Dirichlet weights.
pub fn random_separable(dims: Dims, terms: usize, seed: u64) -> Result<SeparableEnsemble> {
    if terms == 0 {
        return Err(Error::InvalidParameter("need at least one term".into()));
    }
    let mut rng = stream_rng(seed, streams::ENSEMBLE);
    let p = simplex_point(&mut rng, terms);
    let terms = p
        .into_iter()
        .map(|p| EnsembleTerm {
            p,
            a: unit_vector(&mut rng, dims.d1),
            b: unit_vector(&mut rng, dims.d2),
        })
        .collect();
    SeparableEnsemble::new(dims, terms)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PptReport {
    pub ppt: bool,
    pub min_eigenvalue: f64,
}

/// Positivity of the partial transpose on the second factor.
pub fn ppt_check(state: &DensityMatrix) -> Result<PptReport> {
    let dims = state.require_dims()?;
    let pt = partial_transpose(state.matrix(), dims, Subsystem::Second)?;
    let min_eigenvalue = hermitian_eig(&pt)?.min();
    Ok(PptReport {
        ppt: min_eigenvalue >= -1e-9,
        min_eigenvalue,
    })
}

// ---------------------------------------------------------------------------
// Objectives: value and Hermitian gradient G with dD = Re Tr(G dρ).

/// Eigendecomposition of the Hermitian part; products of Hermitian
/// factors are only Hermitian up to roundoff.
fn eig_h(m: &ComplexMatrix) -> crate::linalg::HermitianEigen {
    hermitian_eig(&(m + &m.adjoint()).scale(0.5)).expect("Hermitian part")
}

trait Objective: Sync {
    fn value(&self, rho: &ComplexMatrix) -> f64;
    fn gradient(&self, rho: &ComplexMatrix) -> ComplexMatrix;
}

struct HilbertSchmidtObjective {
    sigma: ComplexMatrix,
}

impl Objective for HilbertSchmidtObjective {
    fn value(&self, rho: &ComplexMatrix) -> f64 {
        (&self.sigma - rho).frobenius_sqr()
    }

    fn gradient(&self, rho: &ComplexMatrix) -> ComplexMatrix {
        (rho - &self.sigma).scale(2.0)
    }
}

struct TraceObjective {
    sigma: ComplexMatrix,
}

impl Objective for TraceObjective {
    fn value(&self, rho: &ComplexMatrix) -> f64 {
        0.5 * eig_h(&(&self.sigma - rho))
            .values
            .iter()
            .map(|x| x.abs())
            .sum::<f64>()
    }

    fn gradient(&self, rho: &ComplexMatrix) -> ComplexMatrix {
        let e = eig_h(&(rho - &self.sigma));
        let signs: Vec<f64> = e
            .values
            .iter()
            .map(|&x| {
                if x.abs() < 1e-14 {
                    0.0
                } else {
                    0.5 * x.signum()
                }
            })
            .collect();
        e.recompose(&signs)
    }
}

struct BuresObjective {
    root_sigma: ComplexMatrix,
}

impl BuresObjective {
    fn inner(&self, rho: &ComplexMatrix) -> ComplexMatrix {
        &(&self.root_sigma * rho) * &self.root_sigma
    }
}

impl Objective for BuresObjective {
    fn value(&self, rho: &ComplexMatrix) -> f64 {
        let tr: f64 = eig_h(&self.inner(rho))
            .values
            .iter()
            .map(|x| x.max(0.0).sqrt())
            .sum();
        2.0 * (1.0 - tr.min(1.0))
    }

    fn gradient(&self, rho: &ComplexMatrix) -> ComplexMatrix {
        // d Tr √X = ½ Tr X^{-1/2} dX on the support of X = √σ ρ √σ.
        let e = eig_h(&self.inner(rho));
        let inv_root: Vec<f64> = e
            .values
            .iter()
            .map(|&x| if x > 1e-14 { 1.0 / x.sqrt() } else { 0.0 })
            .collect();
        let y = e.recompose(&inv_root);
        (&(&self.root_sigma * &y) * &self.root_sigma).scale(-1.0)
    }
}

struct RelativeEntropyObjective {
    sigma: ComplexMatrix,
    neg_entropy: f64,
}

impl RelativeEntropyObjective {
    /// `<w_j|σ|w_j>` for each eigenvector column of `w`, and `W†σW`.
    fn rotated(&self, vectors: &ComplexMatrix) -> ComplexMatrix {
        &(&vectors.adjoint() * &self.sigma) * vectors
    }
}

impl Objective for RelativeEntropyObjective {
    fn value(&self, rho: &ComplexMatrix) -> f64 {
        let e = eig_h(rho);
        let s = self.rotated(&e.vectors);
        let mut cross = 0.0;
        for (j, &mu) in e.values.iter().enumerate() {
            let w = s.get(j, j).re;
            if mu <= crate::distances::SUPPORT_THRESHOLD {
                if w > crate::distances::SUPPORT_THRESHOLD {
                    return f64::INFINITY;
                }
            } else {
                cross += w * mu.ln();
            }
        }
        self.neg_entropy - cross
    }

    fn gradient(&self, rho: &ComplexMatrix) -> ComplexMatrix {
        // Fréchet derivative of ln at ρ, adjoint applied to σ: divided
        // differences of ln on the spectrum of ρ.
        let e = eig_h(rho);
        let s = self.rotated(&e.vectors);
        let n = e.values.len();
        let mu: Vec<f64> = e.values.iter().map(|&x| x.max(1e-300)).collect();
        let l = ComplexMatrix::from_fn(n, n, |j, k| {
            let gamma = if (mu[j] - mu[k]).abs() <= 1e-12 * mu[j].max(mu[k]) {
                2.0 / (mu[j] + mu[k])
            } else {
                (mu[j].ln() - mu[k].ln()) / (mu[j] - mu[k])
            };
            s.get(j, k) * gamma
        });
        (&(&e.vectors * &l) * &e.vectors.adjoint()).scale(-1.0)
    }
}

fn objective_for(kind: DistanceKind, sigma: &DensityMatrix) -> Result<Box<dyn Objective>> {
    let m = sigma.matrix().clone();
    Ok(match kind {
        DistanceKind::HilbertSchmidt => Box::new(HilbertSchmidtObjective { sigma: m }),
        DistanceKind::Trace => Box::new(TraceObjective { sigma: m }),
        DistanceKind::Bures => Box::new(BuresObjective {
            root_sigma: crate::linalg::matrix_func(&m, |x| x.max(0.0).sqrt())?,
        }),
        DistanceKind::RelativeEntropy => {
            let neg_entropy = hermitian_eig(&m)?
                .values
                .iter()
                .map(|&x| crate::distances::x_ln_x(x))
                .sum();
            Box::new(RelativeEntropyObjective {
                sigma: m,
                neg_entropy,
            })
        }
    })
}

// ---------------------------------------------------------------------------
// Ensemble optimizer.

/// Settings of [`estimate_entanglement`] and the PPT projection.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EstimatorConfig {
    pub restarts: usize,
    /// Ensemble size; `None` means `(d1·d2)²`.
    pub terms: Option<usize>,
    pub max_iterations: usize,
    /// Stop after this many consecutive iterations improving by less than
    /// `stall_tolerance`.
    pub stall_iterations: usize,
    pub stall_tolerance: f64,
    pub seed: u64,
    pub dykstra_max_iterations: usize,
    pub dykstra_tolerance: f64,
}

impl Default for EstimatorConfig {
    fn default() -> Self {
        Self {
            restarts: 20,
            terms: None,
            max_iterations: 10_000,
            stall_iterations: 50,
            stall_tolerance: 1e-10,
            seed: 0,
            dykstra_max_iterations: 50_000,
            dykstra_tolerance: 1e-8,
        }
    }
}

struct Params {
    p: Vec<f64>,
    a: Vec<Vec<C64>>,
    b: Vec<Vec<C64>>,
}

impl Params {
    fn phis(&self) -> Vec<Vec<C64>> {
        self.a
            .iter()
            .zip(&self.b)
            .map(|(a, b)| product_vector(a, b))
            .collect()
    }
}

/// Euclidean projection onto the probability simplex.
fn project_simplex(v: &[f64]) -> Vec<f64> {
    let mut u = v.to_vec();
    u.sort_by(|a, b| b.total_cmp(a));
    let mut cumsum = 0.0;
    let mut theta = 0.0;
    for (i, &x) in u.iter().enumerate() {
        cumsum += x;
        let t = (cumsum - 1.0) / (i + 1) as f64;
        if x - t > 0.0 {
            theta = t;
        }
    }
    v.iter().map(|&x| (x - theta).max(0.0)).collect()
}

fn normalized(v: &[C64]) -> Vec<C64> {
    let n = norm_sqr(v).sqrt();
    v.iter().map(|z| z / n).collect()
}

fn apply(m: &ComplexMatrix, v: &[C64]) -> Vec<C64> {
    let n = v.len();
    (0..n)
        .map(|i| (0..n).map(|j| m.get(i, j) * v[j]).sum())
        .collect()
}

struct RestartOutcome {
    params: Params,
    value: f64,
    iterations: usize,
    converged: bool,
}

fn run_restart(
    obj: &dyn Objective,
    warm_up: Option<&dyn Objective>,
    dims: Dims,
    terms: usize,
    cfg: &EstimatorConfig,
    restart: usize,
) -> RestartOutcome {
    let mut rng = stream_rng(cfg.seed, streams::OPTIMIZER + restart as u64);
    let mut params = Params {
        p: simplex_point(&mut rng, terms),
        a: (0..terms).map(|_| unit_vector(&mut rng, dims.d1)).collect(),
        b: (0..terms).map(|_| unit_vector(&mut rng, dims.d2)).collect(),
    };
    let mut iterations = 0;
    if let Some(hs) = warm_up {
        // squared distances: the matching stall threshold is the square
        let first = descend(
            hs,
            dims,
            params,
            cfg,
            cfg.stall_tolerance * cfg.stall_tolerance,
        );
        params = first.params;
        iterations = first.iterations;
    }
    let mut out = descend(obj, dims, params, cfg, cfg.stall_tolerance);
    out.iterations += iterations;
    out
}

fn descend(
    obj: &dyn Objective,
    dims: Dims,
    mut params: Params,
    cfg: &EstimatorConfig,
    stall_tolerance: f64,
) -> RestartOutcome {
    let terms = params.p.len();
    let mut phis = params.phis();
    let mut value = obj.value(&mixture(dims, &params.p, &phis));
    let mut weight_step: f64 = 1.0;
    let mut vector_step: f64 = 0.1;
    let mut stalled = 0;
    let mut converged = false;
    let mut iterations = 0;
    while iterations < cfg.max_iterations {
        iterations += 1;
        let start = value;

        // Weights: projected gradient with backtracking on the quadratic
        // upper model.
        let grad = obj.gradient(&mixture(dims, &params.p, &phis));
        let g: Vec<f64> = phis
            .iter()
            .map(|phi| {
                let gphi = apply(&grad, phi);
                phi.iter().zip(&gphi).map(|(x, y)| (x.conj() * y).re).sum()
            })
            .collect();
        let mut t = (weight_step * 2.0).min(1e6);
        while t > 1e-20 {
            let trial: Vec<f64> = params.p.iter().zip(&g).map(|(p, gk)| p - t * gk).collect();
            let trial = project_simplex(&trial);
            let v = obj.value(&mixture(dims, &trial, &phis));
            let lin: f64 = g
                .iter()
                .zip(trial.iter().zip(&params.p))
                .map(|(gk, (x, p))| gk * (x - p))
                .sum();
            let dist2: f64 = trial
                .iter()
                .zip(&params.p)
                .map(|(x, p)| (x - p) * (x - p))
                .sum();
            if v.is_finite() && v <= value + lin + dist2 / (2.0 * t) {
                if v <= value {
                    params.p = trial;
                    value = v;
                }
                weight_step = t;
                break;
            }
            t *= 0.5;
        }

        // Product vectors: Riemannian gradient on the unit spheres.
        let grad = obj.gradient(&mixture(dims, &params.p, &phis));
        let mut ga = Vec::with_capacity(terms);
        let mut gb = Vec::with_capacity(terms);
        let mut gnorm2 = 0.0;
        for k in 0..terms {
            let psi = apply(&grad, &phis[k]);
            let (a, b) = (&params.a[k], &params.b[k]);
            let scale = 2.0 * params.p[k];
            // (I ⊗ <b|)ψ and (<a| ⊗ I)ψ
            let mut da: Vec<C64> = (0..dims.d1)
                .map(|i| {
                    (0..dims.d2)
                        .map(|j| psi[i * dims.d2 + j] * b[j].conj())
                        .sum::<C64>()
                        * scale
                })
                .collect();
            let mut db: Vec<C64> = (0..dims.d2)
                .map(|j| {
                    (0..dims.d1)
                        .map(|i| psi[i * dims.d2 + j] * a[i].conj())
                        .sum::<C64>()
                        * scale
                })
                .collect();
            for (d, v) in [(&mut da, a), (&mut db, b)] {
                let radial: C64 = v.iter().zip(d.iter()).map(|(x, y)| x.conj() * y).sum();
                let radial = radial.re;
                for (di, vi) in d.iter_mut().zip(v) {
                    *di -= vi * radial;
                }
                gnorm2 += norm_sqr(d);
            }
            ga.push(da);
            gb.push(db);
        }
        if gnorm2 > 0.0 {
            let mut t = (vector_step * 2.0).min(1e3);
            while t > 1e-20 {
                let a: Vec<Vec<C64>> = params
                    .a
                    .iter()
                    .zip(&ga)
                    .map(|(v, d)| {
                        normalized(&v.iter().zip(d).map(|(x, y)| x - y * t).collect::<Vec<_>>())
                    })
                    .collect();
                let b: Vec<Vec<C64>> = params
                    .b
                    .iter()
                    .zip(&gb)
                    .map(|(v, d)| {
                        normalized(&v.iter().zip(d).map(|(x, y)| x - y * t).collect::<Vec<_>>())
                    })
                    .collect();
                let trial_phis: Vec<Vec<C64>> = a
                    .iter()
                    .zip(&b)
                    .map(|(x, y)| product_vector(x, y))
                    .collect();
                let v = obj.value(&mixture(dims, &params.p, &trial_phis));
                if v.is_finite() && v <= value - 1e-4 * t * gnorm2 {
                    params.a = a;
                    params.b = b;
                    phis = trial_phis;
                    value = v;
                    vector_step = t;
                    break;
                }
                t *= 0.5;
            }
        }

        if start - value < stall_tolerance {
            stalled += 1;
            if stalled >= cfg.stall_iterations {
                converged = true;
                break;
            }
        } else {
            stalled = 0;
        }
    }
    RestartOutcome {
        params,
        value,
        iterations,
        converged,
    }
}

/// Bracketing estimate of `E_D(σ)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EntanglementEstimate {
    pub upper: f64,
    pub lower: Option<f64>,
    pub converged: bool,
    pub iterations: usize,
    pub witness: SeparableEnsemble,
}

fn validate_config(cfg: &EstimatorConfig) -> Result<()> {
    if cfg.restarts == 0 || cfg.max_iterations == 0 || cfg.terms == Some(0) {
        return Err(Error::InvalidParameter(
            "restarts, iterations and terms must be positive".into(),
        ));
    }
    if !(cfg.stall_tolerance > 0.0) || !(cfg.dykstra_tolerance > 0.0) {
        return Err(Error::InvalidParameter(
            "tolerances must be positive".into(),
        ));
    }
    Ok(())
}

/// Upper bound from the best of `cfg.restarts` optimized ensembles, lower
/// bound from [`closest_ppt`] for the Hilbert–Schmidt distance.
pub fn estimate_entanglement(
    state: &DensityMatrix,
    kind: DistanceKind,
    cfg: &EstimatorConfig,
) -> Result<EntanglementEstimate> {
    let dims = state.require_dims()?;
    validate_config(cfg)?;
    let terms = cfg.terms.unwrap_or(dims.total() * dims.total());
    let obj = objective_for(kind, state)?;
    let warm_up = HilbertSchmidtObjective {
        sigma: state.matrix().clone(),
    };
    let warm_up: Option<&dyn Objective> =
        (kind != DistanceKind::HilbertSchmidt).then_some(&warm_up as &dyn Objective);
    let outcomes: Vec<RestartOutcome> = (0..cfg.restarts)
        .into_par_iter()
        .map(|r| run_restart(obj.as_ref(), warm_up, dims, terms, cfg, r))
        .collect();
    // min value, ties to the lowest restart index
    let best = outcomes
        .into_iter()
        .reduce(|acc, o| if o.value < acc.value { o } else { acc })
        .expect("restarts >= 1");

    let witness = SeparableEnsemble::new(
        dims,
        best.params
            .p
            .iter()
            .zip(best.params.a.iter().zip(&best.params.b))
            .map(|(&p, (a, b))| EnsembleTerm {
                p,
                a: normalized(a),
                b: normalized(b),
            })
            .collect(),
    )?;
    let upper = distance(kind, state, &ensemble_to_density(&witness)?)?;

    let (lower, lower_converged) = if kind == DistanceKind::HilbertSchmidt {
        let ppt = closest_ppt_with(state, cfg.dykstra_max_iterations, cfg.dykstra_tolerance)?;
        (Some(ppt.distance), ppt.converged)
    } else {
        (None, true)
    };
    Ok(EntanglementEstimate {
        upper,
        lower,
        converged: best.converged && lower_converged,
        iterations: best.iterations,
        witness,
    })
}

// ---------------------------------------------------------------------------
// Nearest PPT state.

#[derive(Clone, Debug)]
pub struct ClosestPpt {
    pub state: DensityMatrix,
    /// `D_HS(σ, ρ*)`.
    pub distance: f64,
    pub iterations: usize,
    pub converged: bool,
}

fn clip_psd(m: &ComplexMatrix) -> (ComplexMatrix, f64) {
    let e = eig_h(m);
    let min = e.min();
    let clipped: Vec<f64> = e.values.iter().map(|x| x.max(0.0)).collect();
    (e.recompose(&clipped), min)
}

/// Nearest PPT state in Hilbert–Schmidt geometry, by Dykstra's method over
/// the PSD cone, the PPT cone and the unit-trace hyperplane.
pub fn closest_ppt(state: &DensityMatrix) -> Result<ClosestPpt> {
    let cfg = EstimatorConfig::default();
    closest_ppt_with(state, cfg.dykstra_max_iterations, cfg.dykstra_tolerance)
}

pub fn closest_ppt_with(
    state: &DensityMatrix,
    max_iterations: usize,
    tolerance: f64,
) -> Result<ClosestPpt> {
    let dims = state.require_dims()?;
    let n = dims.total();
    let identity = ComplexMatrix::identity(n);
    let project_ppt = |z: &ComplexMatrix| -> (ComplexMatrix, f64) {
        let pt = partial_transpose(z, dims, Subsystem::Second).expect("dims checked");
        let (clipped, min) = clip_psd(&pt);
        (
            partial_transpose(&clipped, dims, Subsystem::Second).expect("dims checked"),
            min,
        )
    };
    let project_trace = |z: &ComplexMatrix| -> ComplexMatrix {
        let shift = (1.0 - z.trace().re) / n as f64;
        &z.clone() + &identity.scale(shift)
    };

    let mut x = state.matrix().clone();
    let mut y_psd = ComplexMatrix::zeros(n, n);
    let mut y_ppt = ComplexMatrix::zeros(n, n);
    let mut y_tr = ComplexMatrix::zeros(n, n);
    let mut iterations = 0;
    let mut converged = false;
    while iterations < max_iterations {
        iterations += 1;
        let prev = x.clone();

        let z = &x + &y_psd;
        let (px, _) = clip_psd(&z);
        y_psd = &z - &px;
        x = px;

        let z = &x + &y_ppt;
        let (px, _) = project_ppt(&z);
        y_ppt = &z - &px;
        x = px;

        let z = &x + &y_tr;
        let px = project_trace(&z);
        y_tr = &z - &px;
        x = px;

        let step = (&x - &prev).frobenius_sqr().sqrt();
        if step <= tolerance * 1e-2 {
            let min_psd = eig_h(&x).min();
            let min_ppt = eig_h(&partial_transpose(&x, dims, Subsystem::Second)?).min();
            if min_psd >= -tolerance && min_ppt >= -tolerance {
                converged = true;
                break;
            }
        }
    }

    // Residual infeasibility is at most the tolerance; mixing in a little of
    // I/n lifts both spectra to zero (the partial transpose of I is I).
    let min_eig = eig_h(&x)
        .min()
        .min(eig_h(&partial_transpose(&x, dims, Subsystem::Second)?).min());
    if min_eig < 0.0 {
        let eps = -min_eig / (1.0 / n as f64 - min_eig);
        x = &x.scale(1.0 - eps) + &identity.scale(eps / n as f64);
    }
    let rho = validate_density(&x, Some(dims))?;
    let distance = crate::distances::d_hs(state, &rho)?;
    Ok(ClosestPpt {
        state: rho,
        distance,
        iterations,
        converged,
    })
}

// ---------------------------------------------------------------------------
// Empirical checks of the measure axioms.

/// Largest upper bound accepted as "zero" for separable inputs.
pub const E1_TOLERANCE: f64 = 1e-5;
/// Matched-seed agreement required of two estimates that should be equal.
pub const ESTIMATE_INVARIANCE_TOLERANCE: f64 = 2e-3;
/// Distance-level invariance tolerance.
pub const DISTANCE_INVARIANCE_TOLERANCE: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct E1Report {
    pub kind: DistanceKind,
    pub dims: Dims,
    pub seed: u64,
    pub values: Vec<f64>,
    pub max_upper: f64,
    pub tolerance: f64,
    pub passed: bool,
}

/// Estimates the measure on `n_samples` random separable states, each of
/// which should come out as zero.
pub fn check_e1(
    kind: DistanceKind,
    dims: Dims,
    n_samples: usize,
    seed: u64,
    cfg: &EstimatorConfig,
) -> Result<E1Report> {
    if n_samples == 0 {
        return Err(Error::InvalidParameter("need at least one sample".into()));
    }
    let mut values = Vec::with_capacity(n_samples);
    for i in 0..n_samples {
        let ens = random_separable(dims, dims.total(), seed.wrapping_add(i as u64))?;
        let state = ensemble_to_density(&ens)?;
        values.push(estimate_entanglement(&state, kind, cfg)?.upper);
    }
    let max_upper = values.iter().copied().fold(0.0, f64::max);
    Ok(E1Report {
        kind,
        dims,
        seed,
        values,
        max_upper,
        tolerance: E1_TOLERANCE,
        passed: max_upper <= E1_TOLERANCE,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct E2Branch {
    pub probability: f64,
    /// `None` for branches skipped as negligible.
    pub value: Option<f64>,
}

/// Both sides of the two monotonicity conditions under a local operation.
/// Reported only; nothing is asserted.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct E2Report {
    pub kind: DistanceKind,
    /// `E(σ)`.
    pub before: f64,
    /// `E(Σ_i V_i σ V_i†)`.
    pub total_after: f64,
    /// `Σ_i p_i E(V_i σ V_i† / p_i)`, `p_i = Tr V_i σ V_i†`.
    pub average_after: f64,
    pub branches: Vec<E2Branch>,
    pub total_nonincreasing: bool,
    pub average_nonincreasing: bool,
}

/// Branch weights below this are left out of the average.
pub const E2_BRANCH_CUTOFF: f64 = 1e-10;

pub fn check_e2(
    kind: DistanceKind,
    family: &[(ComplexMatrix, ComplexMatrix)],
    state: &DensityMatrix,
    cfg: &EstimatorConfig,
) -> Result<E2Report> {
    let dims = state.require_dims()?;
    for (i, (a, b)) in family.iter().enumerate() {
        if a.rows() != dims.d1 || a.cols() != dims.d1 || b.rows() != dims.d2 || b.cols() != dims.d2
        {
            return Err(Error::NotLocalForm(format!(
                "pair {i} is {}x{} ⊗ {}x{}, state is {}⊗{}",
                a.rows(),
                a.cols(),
                b.rows(),
                b.cols(),
                dims.d1,
                dims.d2
            )));
        }
    }
    let (a_ops, b_ops): (Vec<_>, Vec<_>) = family.iter().cloned().unzip();
    let channel = new_kraus(local_product_family(&a_ops, &b_ops)?)?;

    let before = estimate_entanglement(state, kind, cfg)?.upper;
    let total_after = estimate_entanglement(&channel.apply(state)?, kind, cfg)?.upper;

    let mut branches = Vec::with_capacity(family.len());
    let mut average_after = 0.0;
    for v in channel.kraus() {
        let out = &(v * state.matrix()) * &v.adjoint();
        let probability = out.trace().re;
        if probability < E2_BRANCH_CUTOFF {
            branches.push(E2Branch {
                probability,
                value: None,
            });
            continue;
        }
        let branch_state = validate_density(&out.scale(1.0 / probability), Some(dims))?;
        let value = estimate_entanglement(&branch_state, kind, cfg)?.upper;
        average_after += probability * value;
        branches.push(E2Branch {
            probability,
            value: Some(value),
        });
    }
    Ok(E2Report {
        kind,
        before,
        total_after,
        average_after,
        branches,
        total_nonincreasing: total_after <= before + ESTIMATE_INVARIANCE_TOLERANCE,
        average_nonincreasing: average_after <= before + ESTIMATE_INVARIANCE_TOLERANCE,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct E3Report {
    pub kind: DistanceKind,
    /// `D(σ, ρ)` with `ρ` the estimator's witness state for `σ`.
    pub distance_before: f64,
    /// `D(UσU†, UρU†)`, `U = U1 ⊗ U2`.
    pub distance_after: f64,
    pub distance_invariant: bool,
    pub estimate_before: f64,
    pub estimate_after: f64,
    pub estimate_invariant: bool,
}

/// Local change of basis `U1 ⊗ U2`: distances are invariant exactly, the
/// estimator up to matched-seed optimizer noise.
pub fn check_e3(
    kind: DistanceKind,
    state: &DensityMatrix,
    u1: &ComplexMatrix,
    u2: &ComplexMatrix,
    cfg: &EstimatorConfig,
) -> Result<E3Report> {
    let dims = state.require_dims()?;
    for (u, d) in [(u1, dims.d1), (u2, dims.d2)] {
        if !u.is_square() || u.dim() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: u.rows(),
            });
        }
        let deviation = unitarity_deviation(u);
        if deviation > 1e-10 {
            return Err(Error::NotUnitary { deviation });
        }
    }
    let u = kron(u1, u2);
    let rotated = state.conjugated_by(&u)?;

    let est_before = estimate_entanglement(state, kind, cfg)?;
    let est_after = estimate_entanglement(&rotated, kind, cfg)?;
    let reference = ensemble_to_density(&est_before.witness)?;
    let distance_before = distance(kind, state, &reference)?;
    let distance_after = distance(kind, &rotated, &reference.conjugated_by(&u)?)?;
    Ok(E3Report {
        kind,
        distance_before,
        distance_after,
        distance_invariant: (distance_before - distance_after).abs()
            <= DISTANCE_INVARIANCE_TOLERANCE,
        estimate_before: est_before.upper,
        estimate_after: est_after.upper,
        estimate_invariant: (est_before.upper - est_after.upper).abs()
            <= ESTIMATE_INVARIANCE_TOLERANCE,
    })
}

/// Haar-random local unitary pair.
pub fn random_local_unitaries(dims: Dims, seed: u64) -> (ComplexMatrix, ComplexMatrix) {
    let mut rng = stream_rng(seed, streams::UNITARY + 2);
    (
        crate::linalg::haar_isometry(&mut rng, dims.d1, dims.d1),
        crate::linalg::haar_isometry(&mut rng, dims.d2, dims.d2),
    )
}
