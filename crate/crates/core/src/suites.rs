//! Seeded, reportable runs: the counterexample reproduction and the
//! property suites behind `qmap properties`.
//!
//! Every sample draws from its own stream of the run seed, so a failure can
//! be replayed from `(seed, dim, sample)` alone and results do not depend on
//! how rayon schedules the work.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channels::{
    channel_norm, mixture_of_unitaries_from, new_kraus, paper_counterexample, random_channel_from,
    KrausChannel, LinearMap, SuperOperator,
};
use crate::distances::{
    contraction_ratio, d_hs, distance, kadison_bound_check, lindblad_check, square, x_ln_x,
    BoundReport, DistanceKind,
};
use crate::entanglement::{
    check_e1, estimate_entanglement, random_local_unitaries, EstimatorConfig,
};
use crate::error::{Error, Result};
use crate::linalg::{haar_isometry, kron, ComplexMatrix, Dims};
use crate::rng::{stream_rng, streams};
use crate::states::{random_density_from, standard_state, DensityMatrix, StandardState};

/// Agreement required between reproduced and published values.
pub const REPRODUCE_TOLERANCE: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ValueCheck {
    pub name: String,
    pub value: f64,
    pub expected: f64,
    pub ok: bool,
}

impl ValueCheck {
    fn new(name: &str, value: f64, expected: f64, tolerance: f64) -> Self {
        Self {
            name: name.into(),
            value,
            expected,
            ok: (value - expected).abs() <= tolerance,
        }
    }
}

/// The four published numbers of the two-qubit counterexample and the
/// Kadison bound evaluated on it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReproduceReport {
    pub d_hs_before: f64,
    pub d_hs_after: f64,
    pub channel_norm: f64,
    pub ratio: f64,
    pub kadison: BoundReport,
    pub checks: Vec<ValueCheck>,
    pub passed: bool,
}

pub fn reproduce() -> Result<ReproduceReport> {
    let (channel, sigma, rho) = paper_counterexample();
    reproduce_with(&channel, &sigma, &rho)
}

/// [`reproduce`] on an arbitrary triple; the expected values stay those of
/// the counterexample, so any other input is reported as a mismatch.
pub fn reproduce_with(
    channel: &KrausChannel,
    sigma: &DensityMatrix,
    rho: &DensityMatrix,
) -> Result<ReproduceReport> {
    let d_hs_before = d_hs(sigma, rho)?;
    let d_hs_after = d_hs(&channel.apply(sigma)?, &channel.apply(rho)?)?;
    let norm = channel_norm(channel);
    let ratio = d_hs_after / d_hs_before;
    let kadison = kadison_bound_check(channel, sigma, rho)?;
    let tol = REPRODUCE_TOLERANCE;
    let checks = vec![
        ValueCheck::new("d_hs(sigma, rho)", d_hs_before, 1.0, tol),
        ValueCheck::new("d_hs(theta sigma, theta rho)", d_hs_after, 2.0, tol),
        ValueCheck::new("channel norm", norm, 2.0, tol),
        ValueCheck::new("ratio", ratio, 2.0, tol),
        ValueCheck::new("kadison slack", kadison.slack, 0.0, tol),
    ];
    let passed = kadison.holds && checks.iter().all(|c| c.ok);
    Ok(ReproduceReport {
        d_hs_before,
        d_hs_after,
        channel_norm: norm,
        ratio,
        kadison,
        checks,
        passed,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Suite {
    /// Nonnegativity and `D(σ, σ) = 0` for all four distances.
    D1,
    /// Contraction under random channels.
    D2,
    Lindblad,
    Kadison,
    E1,
    E3,
}

impl Suite {
    pub const ALL: [Suite; 6] = [
        Suite::D1,
        Suite::D2,
        Suite::Lindblad,
        Suite::Kadison,
        Suite::E1,
        Suite::E3,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Suite::D1 => "d1",
            Suite::D2 => "d2",
            Suite::Lindblad => "lindblad",
            Suite::Kadison => "kadison",
            Suite::E1 => "e1",
            Suite::E3 => "e3",
        }
    }

    /// Sample count when none is given.
    pub fn default_samples(self) -> usize {
        match self {
            Suite::D1 | Suite::Lindblad => 200,
            Suite::D2 | Suite::Kadison => 500,
            Suite::E1 => 50,
            Suite::E3 => 20,
        }
    }

    pub fn default_tolerance(self) -> f64 {
        match self {
            Suite::D1 => 1e-10,
            Suite::D2 | Suite::Lindblad => 1e-8,
            Suite::Kadison => 1e-9,
            Suite::E1 => crate::entanglement::E1_TOLERANCE,
            Suite::E3 => crate::entanglement::DISTANCE_INVARIANCE_TOLERANCE,
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Suite {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Suite::ALL
            .into_iter()
            .find(|x| x.name() == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown suite '{s}'")))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SuiteConfig {
    pub suite: Suite,
    pub seed: u64,
    /// Samples per dimension.
    pub n: usize,
    /// Hilbert space dimensions for the single-system suites.
    pub dims: Vec<usize>,
    /// Bipartition for `e1` and `e3`.
    pub bipartite: Dims,
    pub kinds: Vec<DistanceKind>,
    /// Prepend the counterexample triple to the `d2` samples.
    pub include_counterexample: bool,
    pub tolerance: f64,
    pub restarts: usize,
}

impl SuiteConfig {
    pub fn new(suite: Suite, seed: u64) -> Self {
        let kinds = match suite {
            Suite::D2 => vec![
                DistanceKind::Trace,
                DistanceKind::Bures,
                DistanceKind::RelativeEntropy,
            ],
            Suite::E1 => vec![DistanceKind::HilbertSchmidt],
            _ => DistanceKind::ALL.to_vec(),
        };
        Self {
            suite,
            seed,
            n: suite.default_samples(),
            dims: vec![2, 3, 4],
            bipartite: Dims { d1: 2, d2: 2 },
            kinds,
            include_counterexample: false,
            tolerance: suite.default_tolerance(),
            restarts: EstimatorConfig::default().restarts,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tolerance > 0.0) || !self.tolerance.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "tolerance must be positive, got {}",
                self.tolerance
            )));
        }
        if self.n == 0 || self.restarts == 0 {
            return Err(Error::InvalidParameter(
                "sample and restart counts must be positive".into(),
            ));
        }
        if self.dims.is_empty() || self.dims.iter().any(|&d| d == 0 || d > 16) {
            return Err(Error::InvalidParameter(format!(
                "dimensions must lie in 1..=16, got {:?}",
                self.dims
            )));
        }
        if self.kinds.is_empty() {
            return Err(Error::InvalidParameter("no distance kinds selected".into()));
        }
        Ok(())
    }

    fn estimator(&self) -> EstimatorConfig {
        EstimatorConfig {
            restarts: self.restarts,
            seed: self.seed,
            ..EstimatorConfig::default()
        }
    }
}

/// A failed assertion with what is needed to replay it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Failure {
    pub check: String,
    pub seed: u64,
    pub dim: usize,
    /// `None` for fixed (non-random) inputs.
    pub sample: Option<usize>,
    pub value: f64,
    pub detail: String,
}

/// Worst observed value of one check against its limit.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Metric {
    pub check: String,
    pub worst: f64,
    pub limit: f64,
    pub count: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SuiteReport {
    pub config: SuiteConfig,
    pub metrics: Vec<Metric>,
    /// Samples left out because the quantity is undefined on them, e.g. an
    /// infinite relative entropy.
    pub skipped: usize,
    pub failures: Vec<Failure>,
    pub passed: bool,
}

/// One evaluated check on one sample.
struct Observation {
    check: String,
    dim: usize,
    sample: Option<usize>,
    value: f64,
    limit: f64,
    /// `value ≤ limit` unless stated otherwise.
    ok: bool,
    detail: String,
}

impl Observation {
    fn at_most(
        check: impl Into<String>,
        dim: usize,
        sample: Option<usize>,
        value: f64,
        limit: f64,
    ) -> Self {
        Self {
            check: check.into(),
            dim,
            sample,
            value,
            limit,
            ok: value <= limit,
            detail: String::new(),
        }
    }
}

enum Outcome {
    Seen(Observation),
    Skipped,
}

fn assemble(config: SuiteConfig, outcomes: Vec<Outcome>) -> SuiteReport {
    let mut metrics: Vec<Metric> = Vec::new();
    let mut failures = Vec::new();
    let mut skipped = 0;
    for o in outcomes {
        let o = match o {
            Outcome::Seen(o) => o,
            Outcome::Skipped => {
                skipped += 1;
                continue;
            }
        };
        match metrics.iter_mut().find(|m| m.check == o.check) {
            Some(m) => {
                m.worst = m.worst.max(o.value);
                m.count += 1;
            }
            None => metrics.push(Metric {
                check: o.check.clone(),
                worst: o.value,
                limit: o.limit,
                count: 1,
            }),
        }
        if !o.ok {
            failures.push(Failure {
                check: o.check,
                seed: config.seed,
                dim: o.dim,
                sample: o.sample,
                value: o.value,
                detail: o.detail,
            });
        }
    }
    SuiteReport {
        passed: failures.is_empty(),
        config,
        metrics,
        skipped,
        failures,
    }
}

fn sample_rng(seed: u64, dim: usize, sample: usize) -> rand_chacha::ChaCha20Rng {
    stream_rng(seed, streams::SUITE + ((dim as u64) << 20) + sample as u64)
}

/// Channel and state pair of sample `i` at dimension `d`; shared by the
/// `kadison` and `d2` suites.
pub fn sample_triple(
    seed: u64,
    d: usize,
    i: usize,
) -> (KrausChannel, DensityMatrix, DensityMatrix) {
    let mut rng = sample_rng(seed, d, i);
    let k = rng.random_range(1..=d + 1);
    let channel = random_channel_from(&mut rng, d, k);
    let sigma = random_density_from(&mut rng, d, d);
    let rho = random_density_from(&mut rng, d, d);
    (channel, sigma, rho)
}

/// Sample `i` of the unital-contraction check: a mixture of `2..=d+1`
/// Haar unitaries and a state pair.
pub fn sample_unital(
    seed: u64,
    d: usize,
    i: usize,
) -> (KrausChannel, DensityMatrix, DensityMatrix) {
    let mut rng = sample_rng(seed ^ 0x756e_6974_616c, d, i);
    let n = rng.random_range(2..=d + 1);
    let channel = mixture_of_unitaries_from(&mut rng, d, n);
    let sigma = random_density_from(&mut rng, d, d);
    let rho = random_density_from(&mut rng, d, d);
    (channel, sigma, rho)
}

/// Sub-unital channel and positive operand for sample `i`. Even samples are
/// unital mixtures of unitaries; odd ones follow the mixture with an
/// isometric embedding `C^d -> C^{d+1}`, so `Φ(I) = VV† ≤ I`.
pub fn sample_sub_unital(seed: u64, d: usize, i: usize) -> (KrausChannel, ComplexMatrix) {
    let mut rng = sample_rng(seed ^ 0x6c69_6e64, d, i);
    let n = rng.random_range(1..=d + 1);
    let mixture = mixture_of_unitaries_from(&mut rng, d, n);
    let channel = if i.is_multiple_of(2) {
        mixture
    } else {
        let v = haar_isometry(&mut rng, d + 1, d);
        new_kraus(mixture.kraus().iter().map(|k| &v * k).collect())
            .expect("isometry after a channel is trace preserving")
    };
    let scale = rng.random_range(0.1..=d as f64);
    let a = random_density_from(&mut rng, d, d).matrix().scale(scale);
    (channel, a)
}

fn random_bipartite(seed: u64, dims: Dims, i: usize) -> (DensityMatrix, DensityMatrix) {
    let mut rng = sample_rng(seed, dims.total(), i);
    let n = dims.total();
    let with = |s: DensityMatrix| s.with_dims(Some(dims)).expect("matching size");
    (
        with(random_density_from(&mut rng, n, n)),
        with(random_density_from(&mut rng, n, n)),
    )
}

pub fn run_suite(config: &SuiteConfig) -> Result<SuiteReport> {
    config.validate()?;
    let outcomes = match config.suite {
        Suite::Kadison => kadison_suite(config)?,
        Suite::D1 => d1_suite(config)?,
        Suite::D2 => d2_suite(config)?,
        Suite::Lindblad => lindblad_suite(config)?,
        Suite::E1 => e1_suite(config)?,
        Suite::E3 => e3_suite(config)?,
    };
    Ok(assemble(config.clone(), outcomes))
}

fn grid(config: &SuiteConfig) -> Vec<(usize, usize)> {
    config
        .dims
        .iter()
        .flat_map(|&d| (0..config.n).map(move |i| (d, i)))
        .collect()
}

fn kadison_suite(config: &SuiteConfig) -> Result<Vec<Outcome>> {
    let tol = config.tolerance;
    let per_sample: Vec<Vec<Outcome>> = grid(config)
        .into_par_iter()
        .map(|(d, i)| -> Result<Vec<Outcome>> {
            let (ch, sigma, rho) = sample_triple(config.seed, d, i);
            let r = kadison_bound_check(&ch, &sigma, &rho)?;
            // excess over the bound, relative to max(1, rhs)
            let excess = (r.lhs - r.rhs) / r.rhs.max(1.0);
            let mut out = vec![Outcome::Seen(Observation::at_most(
                "kadison excess",
                d,
                Some(i),
                excess,
                tol,
            ))];
            let (ch, sigma, rho) = sample_unital(config.seed, d, i);
            out.push(
                match contraction_ratio(DistanceKind::HilbertSchmidt, &ch, &sigma, &rho) {
                    Ok(ratio) => Outcome::Seen(Observation::at_most(
                        "unital hilbert_schmidt ratio - 1",
                        d,
                        Some(i),
                        ratio - 1.0,
                        1e-8,
                    )),
                    Err(Error::DegenerateInput { .. }) => Outcome::Skipped,
                    Err(e) => return Err(e),
                },
            );
            Ok(out)
        })
        .collect::<Result<_>>()?;
    Ok(per_sample.into_iter().flatten().collect())
}

fn d1_suite(config: &SuiteConfig) -> Result<Vec<Outcome>> {
    let tol = config.tolerance;
    let per_sample: Vec<Vec<Outcome>> = grid(config)
        .into_par_iter()
        .map(|(d, i)| -> Result<Vec<Outcome>> {
            let mut rng = sample_rng(config.seed, d, i);
            let sigma = random_density_from(&mut rng, d, d);
            let rho = random_density_from(&mut rng, d, d);
            let mut out = Vec::new();
            for &kind in &config.kinds {
                let self_distance = distance(kind, &sigma, &sigma)?;
                out.push(Outcome::Seen(Observation::at_most(
                    format!("{kind} self distance"),
                    d,
                    Some(i),
                    self_distance.abs(),
                    tol,
                )));
                let pair = distance(kind, &sigma, &rho)?;
                out.push(Outcome::Seen(Observation::at_most(
                    format!("{kind} negative part"),
                    d,
                    Some(i),
                    -pair,
                    1e-12,
                )));
            }
            Ok(out)
        })
        .collect::<Result<_>>()?;
    Ok(per_sample.into_iter().flatten().collect())
}

fn d2_suite(config: &SuiteConfig) -> Result<Vec<Outcome>> {
    let tol = config.tolerance;
    let ratio_outcome = |kind: DistanceKind,
                         d: usize,
                         sample: Option<usize>,
                         ch: &KrausChannel,
                         sigma: &DensityMatrix,
                         rho: &DensityMatrix|
     -> Result<Outcome> {
        match contraction_ratio(kind, ch, sigma, rho) {
            Ok(ratio) => {
                let mut o =
                    Observation::at_most(format!("{kind} ratio - 1"), d, sample, ratio - 1.0, tol);
                if !o.ok && sample.is_none() {
                    o.detail = "counterexample channel".into();
                }
                Ok(Outcome::Seen(o))
            }
            Err(Error::InfiniteDistance | Error::DegenerateInput { .. }) => Ok(Outcome::Skipped),
            Err(e) => Err(e),
        }
    };
    let mut outcomes = Vec::new();
    if config.include_counterexample {
        let (ch, sigma, rho) = paper_counterexample();
        for &kind in &config.kinds {
            outcomes.push(ratio_outcome(kind, 4, None, &ch, &sigma, &rho)?);
        }
    }
    let per_sample: Vec<Vec<Outcome>> = grid(config)
        .into_par_iter()
        .map(|(d, i)| -> Result<Vec<Outcome>> {
            let (ch, sigma, rho) = sample_triple(config.seed, d, i);
            config
                .kinds
                .iter()
                .map(|&kind| ratio_outcome(kind, d, Some(i), &ch, &sigma, &rho))
                .collect()
        })
        .collect::<Result<_>>()?;
    outcomes.extend(per_sample.into_iter().flatten());
    Ok(outcomes)
}

fn lindblad_suite(config: &SuiteConfig) -> Result<Vec<Outcome>> {
    let tol = config.tolerance;
    let fs: [(&str, fn(f64) -> f64); 2] = [("x^2", square), ("x ln x", x_ln_x)];
    let per_sample: Vec<Vec<Outcome>> = grid(config)
        .into_par_iter()
        .map(|(d, i)| -> Result<Vec<Outcome>> {
            let (ch, a) = sample_sub_unital(config.seed, d, i);
            let transpose = SuperOperator::transpose_map(d);
            let maps: [(&str, &dyn LinearMap); 2] = [("channel", &ch), ("transpose", &transpose)];
            let mut out = Vec::new();
            for (map_name, map) in maps {
                for (f_name, f) in fs {
                    let r = lindblad_check(map, &a, f)?;
                    out.push(Outcome::Seen(Observation::at_most(
                        format!("{map_name} {f_name} excess"),
                        d,
                        Some(i),
                        r.lhs - r.rhs,
                        tol,
                    )));
                }
            }
            Ok(out)
        })
        .collect::<Result<_>>()?;
    let mut outcomes: Vec<Outcome> = per_sample.into_iter().flatten().collect();

    // Negative control: the counterexample channel has norm 2 and must be
    // refused.
    let (example, sigma, _) = paper_counterexample();
    let rejected = matches!(
        lindblad_check(&example, sigma.matrix(), square),
        Err(Error::NormExceedsOne { .. })
    );
    outcomes.push(Outcome::Seen(Observation {
        check: "norm-2 channel rejected".into(),
        dim: 4,
        sample: None,
        value: if rejected { 0.0 } else { 1.0 },
        limit: 0.0,
        ok: rejected,
        detail: if rejected {
            String::new()
        } else {
            "lindblad_check accepted a map of norm 2".into()
        },
    }));
    Ok(outcomes)
}

fn e1_suite(config: &SuiteConfig) -> Result<Vec<Outcome>> {
    let mut outcomes = Vec::new();
    for &kind in &config.kinds {
        let r = check_e1(
            kind,
            config.bipartite,
            config.n,
            config.seed,
            &config.estimator(),
        )?;
        for (i, v) in r.values.into_iter().enumerate() {
            outcomes.push(Outcome::Seen(Observation::at_most(
                format!("{kind} separable estimate"),
                config.bipartite.total(),
                Some(i),
                v,
                config.tolerance,
            )));
        }
    }
    Ok(outcomes)
}

/// How many of the `e3` samples also compare full estimates, which cost
/// two optimizer runs each.
pub const E3_ESTIMATOR_SAMPLES: usize = 2;

fn e3_suite(config: &SuiteConfig) -> Result<Vec<Outcome>> {
    let dims = config.bipartite;
    let n = dims.total();
    let per_sample: Vec<Vec<Outcome>> = (0..config.n)
        .into_par_iter()
        .map(|i| -> Result<Vec<Outcome>> {
            let (sigma, rho) = random_bipartite(config.seed, dims, i);
            let (u1, u2) = random_local_unitaries(dims, config.seed.wrapping_add(i as u64));
            let u = kron(&u1, &u2);
            let (us, ur) = (sigma.conjugated_by(&u)?, rho.conjugated_by(&u)?);
            let mut out = Vec::new();
            for &kind in &config.kinds {
                let before = distance(kind, &sigma, &rho)?;
                let after = distance(kind, &us, &ur)?;
                out.push(Outcome::Seen(Observation::at_most(
                    format!("{kind} local unitary gap"),
                    n,
                    Some(i),
                    (before - after).abs(),
                    config.tolerance,
                )));
            }
            Ok(out)
        })
        .collect::<Result<_>>()?;
    let mut outcomes: Vec<Outcome> = per_sample.into_iter().flatten().collect();

    // Estimator level, Hilbert–Schmidt, on the Bell state (for 2⊗2) and the
    // first few random states.
    let cfg = config.estimator();
    let mut states: Vec<(Option<usize>, DensityMatrix)> = Vec::new();
    if dims == (Dims { d1: 2, d2: 2 }) {
        states.push((None, standard_state(StandardState::Bell)?));
    }
    for i in 0..config.n.min(E3_ESTIMATOR_SAMPLES) {
        states.push((Some(i), random_bipartite(config.seed, dims, i).0));
    }
    for (sample, state) in states {
        let (u1, u2) = random_local_unitaries(
            dims,
            config
                .seed
                .wrapping_add(0x9e37 + sample.unwrap_or(0) as u64),
        );
        let rotated = state.conjugated_by(&kron(&u1, &u2))?;
        let before = estimate_entanglement(&state, DistanceKind::HilbertSchmidt, &cfg)?.upper;
        let after = estimate_entanglement(&rotated, DistanceKind::HilbertSchmidt, &cfg)?.upper;
        let mut o = Observation::at_most(
            "hilbert_schmidt estimate gap",
            n,
            sample,
            (before - after).abs(),
            crate::entanglement::ESTIMATE_INVARIANCE_TOLERANCE,
        );
        if sample.is_none() {
            o.detail = "bell state".into();
        }
        outcomes.push(Outcome::Seen(o));
    }
    Ok(outcomes)
}
