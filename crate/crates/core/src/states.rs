//! Density matrices: validation, standard states and seeded sampling.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{hermitian_eig, ComplexMatrix, Dims, C64, ZERO};
use crate::rng::{ginibre, stream_rng, streams};

/// Lowest eigenvalue accepted for a state.
pub const MIN_EIGENVALUE: f64 = -1e-9;
/// Allowed deviation of the trace from one.
pub const TRACE_TOLERANCE: f64 = 1e-9;

/// A validated quantum state: Hermitian, positive semidefinite, unit trace.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "StateJson", into = "StateJson")]
pub struct DensityMatrix {
    matrix: ComplexMatrix,
    dims: Option<Dims>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct StateJson {
    matrix: ComplexMatrix,
    dims: Option<Dims>,
}

impl TryFrom<StateJson> for DensityMatrix {
    type Error = Error;
    fn try_from(j: StateJson) -> Result<Self> {
        validate_density(&j.matrix, j.dims)
    }
}

impl From<DensityMatrix> for StateJson {
    fn from(s: DensityMatrix) -> Self {
        StateJson {
            matrix: s.matrix,
            dims: s.dims,
        }
    }
}

impl DensityMatrix {
    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn dims(&self) -> Option<Dims> {
        self.dims
    }

    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    /// Bipartite dimensions or [`Error::MissingDims`].
    pub fn require_dims(&self) -> Result<Dims> {
        self.dims.ok_or(Error::MissingDims)
    }

    /// Re-validates with the given bipartition attached.
    pub fn with_dims(self, dims: Option<Dims>) -> Result<Self> {
        if let Some(d) = dims {
            d.check(&self.matrix)?;
        }
        Ok(Self {
            matrix: self.matrix,
            dims,
        })
    }

    /// `U σ U†`. The caller guarantees `U` is unitary; the result is
    /// re-validated anyway.
    pub fn conjugated_by(&self, u: &ComplexMatrix) -> Result<Self> {
        let m = &(u * &self.matrix) * &u.adjoint();
        validate_density(&m, self.dims)
    }

    /// Wraps a matrix known to be a state up to roundoff, without
    /// the eigenvalue check. Used on hot optimizer paths where the
    /// construction guarantees the invariants.
    pub(crate) fn from_trusted(matrix: ComplexMatrix, dims: Option<Dims>) -> Self {
        Self { matrix, dims }
    }
}

/// Checks the three state invariants and returns the symmetrized state.
pub fn validate_density(m: &ComplexMatrix, dims: Option<Dims>) -> Result<DensityMatrix> {
    if let Some(d) = dims {
        d.check(m)?;
    }
    let sym = m.symmetrized()?;
    let trace = sym.trace().re;
    if (trace - 1.0).abs() > TRACE_TOLERANCE {
        return Err(Error::TraceNotOne { trace });
    }
    let min_eigenvalue = hermitian_eig(&sym)?.min();
    if min_eigenvalue < MIN_EIGENVALUE {
        return Err(Error::NotPositive { min_eigenvalue });
    }
    Ok(DensityMatrix { matrix: sym, dims })
}

/// Named states used throughout the tests and the CLI.
#[derive(Clone, Debug)]
pub enum StandardState {
    /// `|ψ><ψ|` for the normalized vector.
    Pure(Vec<C64>),
    /// `|Φ+><Φ+|`, `|Φ+> = (|00> + |11>)/√2`, dims (2,2).
    Bell,
    /// `p·bell + (1-p)·I/4`, `p ∈ [-1/3, 1]`.
    Werner(f64),
    MaximallyMixed(usize),
    /// `diag(1/2, 1/2, 0, 0)`, the first state of the counterexample.
    PaperSigma,
    /// `diag(0, 0, 1/2, 1/2)`.
    PaperRho,
}

fn two_qubits() -> Option<Dims> {
    Some(Dims { d1: 2, d2: 2 })
}

pub fn bell_vector() -> Vec<C64> {
    let s = C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    vec![s, ZERO, ZERO, s]
}

pub fn standard_state(kind: StandardState) -> Result<DensityMatrix> {
    match kind {
        StandardState::Pure(v) => {
            let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            if v.is_empty() || !(norm > 0.0) || !norm.is_finite() {
                return Err(Error::InvalidParameter(
                    "pure state vector must be nonzero and finite".into(),
                ));
            }
            let v: Vec<C64> = v.iter().map(|z| z / norm).collect();
            validate_density(&ComplexMatrix::outer(&v, &v), None)
        }
        StandardState::Bell => {
            let v = bell_vector();
            validate_density(&ComplexMatrix::outer(&v, &v), two_qubits())
        }
        StandardState::Werner(p) => {
            if !(-1.0 / 3.0..=1.0).contains(&p) {
                return Err(Error::InvalidParameter(format!(
                    "Werner parameter {p} outside [-1/3, 1]"
                )));
            }
            let v = bell_vector();
            let bell = ComplexMatrix::outer(&v, &v);
            let mixed = ComplexMatrix::identity(4).scale(0.25);
            let m = &bell.scale(p) + &mixed.scale(1.0 - p);
            validate_density(&m, two_qubits())
        }
        StandardState::MaximallyMixed(d) => {
            if d == 0 {
                return Err(Error::InvalidParameter("dimension must be positive".into()));
            }
            validate_density(&ComplexMatrix::identity(d).scale(1.0 / d as f64), None)
        }
        StandardState::PaperSigma => validate_density(
            &ComplexMatrix::from_real_diagonal(&[0.5, 0.5, 0.0, 0.0]),
            two_qubits(),
        ),
        StandardState::PaperRho => validate_density(
            &ComplexMatrix::from_real_diagonal(&[0.0, 0.0, 0.5, 0.5]),
            two_qubits(),
        ),
    }
}

/// `G G† / Tr(G G†)` for a `d × rank` Ginibre matrix `G` drawn from the
/// seeded density stream. `rank = d` samples the Hilbert–Schmidt measure.
pub fn random_density(d: usize, rank: usize, seed: u64) -> Result<DensityMatrix> {
    if d == 0 || rank == 0 || rank > d {
        return Err(Error::InvalidParameter(format!(
            "need 1 <= rank <= d, got d={d}, rank={rank}"
        )));
    }
    let mut rng = stream_rng(seed, streams::DENSITY);
    Ok(random_density_from(&mut rng, d, rank))
}

pub(crate) fn random_density_from<R: rand::Rng + ?Sized>(
    rng: &mut R,
    d: usize,
    rank: usize,
) -> DensityMatrix {
    let g = ComplexMatrix::from_inner(ginibre(rng, d, rank));
    let gg = &g * &g.adjoint();
    let m = gg.scale(1.0 / gg.trace().re);
    let m = (&m + &m.adjoint()).scale(0.5);
    DensityMatrix::from_trusted(m, None)
}

/// `Tr(σ²)`.
pub fn purity(state: &DensityMatrix) -> f64 {
    state.matrix.frobenius_sqr()
}
