//! Distance candidates on states and the operator inequalities they are
//! checked against.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::channels::{channel_norm, KrausChannel, LinearMap};
use crate::error::{Error, Result};
use crate::linalg::{hermitian_eig, matrix_func, ComplexMatrix};
use crate::states::DensityMatrix;

/// Reference distances at or below this make a contraction ratio
/// meaningless.
pub const DEGENERACY_THRESHOLD: f64 = 1e-12;
/// Eigenvalues of the reference state at or below this count as its kernel.
pub const SUPPORT_THRESHOLD: f64 = 1e-12;
/// Relative slack of [`BoundReport::holds`].
pub const BOUND_RTOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DistanceKind {
    HilbertSchmidt,
    Trace,
    Bures,
    RelativeEntropy,
}

impl DistanceKind {
    pub const ALL: [DistanceKind; 4] = [
        DistanceKind::HilbertSchmidt,
        DistanceKind::Trace,
        DistanceKind::Bures,
        DistanceKind::RelativeEntropy,
    ];

    pub fn name(self) -> &'static str {
        match self {
            DistanceKind::HilbertSchmidt => "hilbert_schmidt",
            DistanceKind::Trace => "trace",
            DistanceKind::Bures => "bures",
            DistanceKind::RelativeEntropy => "relative_entropy",
        }
    }
}

impl fmt::Display for DistanceKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for DistanceKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.replace('-', "_").as_str() {
            "hilbert_schmidt" | "hs" => Ok(DistanceKind::HilbertSchmidt),
            "trace" => Ok(DistanceKind::Trace),
            "bures" => Ok(DistanceKind::Bures),
            "relative_entropy" | "re" => Ok(DistanceKind::RelativeEntropy),
            other => Err(Error::InvalidParameter(format!(
                "unknown distance '{other}'"
            ))),
        }
    }
}

fn same_dims(sigma: &DensityMatrix, rho: &DensityMatrix) -> Result<()> {
    if sigma.dim() != rho.dim() {
        return Err(Error::DimensionMismatch {
            expected: sigma.dim(),
            found: rho.dim(),
        });
    }
    Ok(())
}

pub fn distance(kind: DistanceKind, sigma: &DensityMatrix, rho: &DensityMatrix) -> Result<f64> {
    match kind {
        DistanceKind::HilbertSchmidt => d_hs(sigma, rho),
        DistanceKind::Trace => trace_distance(sigma, rho),
        DistanceKind::Bures => bures(sigma, rho),
        DistanceKind::RelativeEntropy => rel_entropy(sigma, rho),
    }
}

/// `Tr[(σ - ρ)²]`, computed as the squared Frobenius norm of `σ - ρ`.
pub fn d_hs(sigma: &DensityMatrix, rho: &DensityMatrix) -> Result<f64> {
    same_dims(sigma, rho)?;
    Ok((sigma.matrix() - rho.matrix()).frobenius_sqr())
}

/// `½ Σ |λ_i(σ - ρ)|`.
pub fn trace_distance(sigma: &DensityMatrix, rho: &DensityMatrix) -> Result<f64> {
    same_dims(sigma, rho)?;
    let e = hermitian_eig(&(sigma.matrix() - rho.matrix()))?;
    Ok(0.5 * e.values.iter().map(|x| x.abs()).sum::<f64>())
}

/// Uhlmann fidelity `(Tr √(√σ ρ √σ))²`, clipped to `[0, 1]`.
pub fn fidelity(sigma: &DensityMatrix, rho: &DensityMatrix) -> Result<f64> {
    same_dims(sigma, rho)?;
    let root = matrix_func(sigma.matrix(), |x| x.max(0.0).sqrt())?;
    let inner = &(&root * rho.matrix()) * &root;
    let tr_sqrt: f64 = hermitian_eig(&inner)?
        .values
        .iter()
        .map(|x| x.max(0.0).sqrt())
        .sum();
    Ok((tr_sqrt * tr_sqrt).min(1.0))
}

/// `2(1 - √F)`.
pub fn bures(sigma: &DensityMatrix, rho: &DensityMatrix) -> Result<f64> {
    Ok(2.0 * (1.0 - fidelity(sigma, rho)?.sqrt()))
}

/// `Tr σ(ln σ - ln ρ)`, or `+∞` when `σ` has weight outside the support of
/// `ρ`.
pub fn rel_entropy(sigma: &DensityMatrix, rho: &DensityMatrix) -> Result<f64> {
    same_dims(sigma, rho)?;
    let es = hermitian_eig(sigma.matrix())?;
    let er = hermitian_eig(rho.matrix())?;
    let neg_entropy: f64 = es.values.iter().map(|&x| x_ln_x(x)).sum();

    let mut cross = 0.0;
    let mut kernel_weight = 0.0;
    for (j, &mu) in er.values.iter().enumerate() {
        let w = er.vector(j);
        // <w|σ|w>
        let weight: f64 = (0..w.len())
            .flat_map(|a| (0..w.len()).map(move |b| (a, b)))
            .map(|(a, b)| (w[a].conj() * sigma.matrix().get(a, b) * w[b]).re)
            .sum();
        if mu <= SUPPORT_THRESHOLD {
            kernel_weight += weight;
        } else {
            cross += weight * mu.ln();
        }
    }
    if kernel_weight > SUPPORT_THRESHOLD {
        return Ok(f64::INFINITY);
    }
    Ok(neg_entropy - cross)
}

/// `x ln x` with `0·ln 0 = 0`; nonpositive arguments map to 0.
pub fn x_ln_x(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        x * x.ln()
    }
}

pub fn square(x: f64) -> f64 {
    x * x
}

/// `D(Θσ, Θρ) / D(σ, ρ)`.
pub fn contraction_ratio(
    kind: DistanceKind,
    channel: &KrausChannel,
    sigma: &DensityMatrix,
    rho: &DensityMatrix,
) -> Result<f64> {
    let before = distance(kind, sigma, rho)?;
    if before.is_infinite() {
        return Err(Error::InfiniteDistance);
    }
    if before <= DEGENERACY_THRESHOLD {
        return Err(Error::DegenerateInput { distance: before });
    }
    let after = distance(kind, &channel.apply(sigma)?, &channel.apply(rho)?)?;
    Ok(after / before)
}

/// Two sides of an inequality `lhs ≤ rhs`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub lhs: f64,
    pub rhs: f64,
    /// `lhs / rhs`, absent when `rhs ≤ 0`.
    pub ratio: Option<f64>,
    pub holds: bool,
    /// `rhs - lhs`.
    pub slack: f64,
}

impl BoundReport {
    pub fn new(lhs: f64, rhs: f64) -> Self {
        Self {
            lhs,
            rhs,
            ratio: (rhs > 0.0).then(|| lhs / rhs),
            holds: lhs <= rhs + BOUND_RTOL * rhs.max(1.0),
            slack: rhs - lhs,
        }
    }
}

/// `D_HS(Θσ, Θρ) ≤ ‖Θ‖ · D_HS(σ, ρ)`, the trace of Kadison's inequality
/// `Θ(X)² ≤ ‖Θ‖ Θ(X²)` at `X = σ - ρ`.
pub fn kadison_bound_check(
    channel: &KrausChannel,
    sigma: &DensityMatrix,
    rho: &DensityMatrix,
) -> Result<BoundReport> {
    same_dims(sigma, rho)?;
    let lhs = d_hs(&channel.apply(sigma)?, &channel.apply(rho)?)?;
    let rhs = channel_norm(channel) * d_hs(sigma, rho)?;
    Ok(BoundReport::new(lhs, rhs))
}

/// Allowed excess of the map norm over one, and of trace deviations.
pub const LINDBLAD_MAP_TOLERANCE: f64 = 1e-9;

/// `Tr f(Φ(A)) ≤ Tr f(A)` for a trace-preserving positive map of norm at
/// most one, a positive operator `A` and a convex `f` with `f(0) = 0`.
///
/// Positivity of `Φ` and convexity of `f` are the caller's claims. Norm and
/// trace preservation are checked. `f` is evaluated on eigenvalues clipped
/// at zero, since both operands are positive up to roundoff.
pub fn lindblad_check(
    map: &dyn LinearMap,
    a: &ComplexMatrix,
    f: impl Fn(f64) -> f64,
) -> Result<BoundReport> {
    if !a.is_square() || a.dim() != map.in_dim() {
        return Err(Error::DimensionMismatch {
            expected: map.in_dim(),
            found: a.rows(),
        });
    }
    let norm = map.map_norm();
    if norm > 1.0 + LINDBLAD_MAP_TOLERANCE {
        return Err(Error::NormExceedsOne { norm });
    }
    let deviation = map.trace_deviation();
    if deviation > LINDBLAD_MAP_TOLERANCE {
        return Err(Error::NotTracePreserving { deviation });
    }
    let ea = hermitian_eig(a)?;
    let scale = a.max_abs().max(1.0);
    if ea.min() < -1e-9 * scale {
        return Err(Error::NotPositiveOperand {
            min_eigenvalue: ea.min(),
        });
    }
    let trace_f = |values: &[f64]| -> Result<f64> {
        let mut total = 0.0;
        for &lambda in values {
            let y = f(lambda.max(0.0));
            if !y.is_finite() {
                return Err(Error::DomainError { eigenvalue: lambda });
            }
            total += y;
        }
        Ok(total)
    };
    let rhs = trace_f(&ea.values)?;
    let image = map.apply_operator(a);
    let lhs = trace_f(&hermitian_eig(&image)?.values)?;
    Ok(BoundReport::new(lhs, rhs))
}
