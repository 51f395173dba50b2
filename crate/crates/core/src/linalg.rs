//! Dense complex linear algebra.
//!
//! Bipartite operators use row-major composite indexing: basis vector
//! `|i1>|i2>` of `H1 ⊗ H2` sits at index `i1 * d2 + i2`. [`kron`],
//! [`partial_trace`] and [`partial_transpose`] all follow it.

use std::fmt;
use std::ops::{Add, Mul, Sub};

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

pub type C64 = Complex64;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);

/// Relative Hermiticity tolerance, scaled by the max-abs entry.
pub const HERMITIAN_RTOL: f64 = 1e-10;

/// Dense complex matrix with finite entries.
///
/// Almost everything in the crate is square; Kraus operators of channels
/// between spaces of different dimension are the exception, so the type
/// does not force squareness. [`ComplexMatrix::dim`] is the side length of
/// a square matrix.
#[derive(Clone, PartialEq)]
pub struct ComplexMatrix(DMatrix<C64>);

impl ComplexMatrix {
    /// Wraps a matrix, rejecting NaN and infinite entries.
    pub fn new(inner: DMatrix<C64>) -> Result<Self> {
        if inner.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
            Ok(Self(inner))
        } else {
            Err(Error::NonFinite)
        }
    }

    pub(crate) fn from_inner(inner: DMatrix<C64>) -> Self {
        Self(inner)
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self(DMatrix::zeros(rows, cols))
    }

    pub fn identity(dim: usize) -> Self {
        Self(DMatrix::identity(dim, dim))
    }

    pub fn from_fn(rows: usize, cols: usize, f: impl FnMut(usize, usize) -> C64) -> Self {
        Self(DMatrix::from_fn(rows, cols, f))
    }

    /// Square matrix from nested rows. Panics on ragged input.
    pub fn from_rows(rows: &[Vec<C64>]) -> Self {
        let n = rows.len();
        let m = rows.first().map_or(0, Vec::len);
        assert!(rows.iter().all(|r| r.len() == m), "ragged rows");
        Self(DMatrix::from_fn(n, m, |i, j| rows[i][j]))
    }

    /// Real matrix from nested rows.
    pub fn from_real_rows(rows: &[&[f64]]) -> Self {
        let n = rows.len();
        let m = rows.first().map_or(0, |r| r.len());
        assert!(rows.iter().all(|r| r.len() == m), "ragged rows");
        Self(DMatrix::from_fn(n, m, |i, j| C64::new(rows[i][j], 0.0)))
    }

    pub fn from_real_diagonal(diag: &[f64]) -> Self {
        let n = diag.len();
        Self(DMatrix::from_fn(n, n, |i, j| {
            if i == j {
                C64::new(diag[i], 0.0)
            } else {
                ZERO
            }
        }))
    }

    /// `|v><w|`.
    pub fn outer(v: &[C64], w: &[C64]) -> Self {
        Self(DMatrix::from_fn(v.len(), w.len(), |i, j| {
            v[i] * w[j].conj()
        }))
    }

    pub fn rows(&self) -> usize {
        self.0.nrows()
    }

    pub fn cols(&self) -> usize {
        self.0.ncols()
    }

    pub fn is_square(&self) -> bool {
        self.rows() == self.cols()
    }

    /// Side length; meaningful for square matrices.
    pub fn dim(&self) -> usize {
        self.rows()
    }

    pub fn as_inner(&self) -> &DMatrix<C64> {
        &self.0
    }

    pub fn into_inner(self) -> DMatrix<C64> {
        self.0
    }

    pub fn get(&self, row: usize, col: usize) -> C64 {
        self.0[(row, col)]
    }

    pub fn adjoint(&self) -> Self {
        Self(self.0.adjoint())
    }

    pub fn transpose(&self) -> Self {
        Self(self.0.transpose())
    }

    pub fn conjugate(&self) -> Self {
        Self(self.0.conjugate())
    }

    pub fn scale(&self, s: f64) -> Self {
        Self(self.0.scale(s))
    }

    pub fn trace(&self) -> C64 {
        self.0.trace()
    }

    /// `‖M‖_∞`: largest entry modulus.
    pub fn max_abs(&self) -> f64 {
        self.0.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Frobenius (Hilbert–Schmidt) norm squared, `Tr(M†M)`.
    pub fn frobenius_sqr(&self) -> f64 {
        self.0.iter().map(|z| z.norm_sqr()).sum()
    }

    /// `Tr(A† B)`.
    pub fn hs_inner(&self, other: &Self) -> C64 {
        self.0
            .iter()
            .zip(other.0.iter())
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    /// `max |M - M†|` entrywise.
    pub fn hermitian_deviation(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        let n = self.rows();
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in i..n {
                worst = worst.max((self.0[(i, j)] - self.0[(j, i)].conj()).norm());
            }
        }
        worst
    }

    /// Checks Hermiticity at the relative tolerance and returns `(M + M†)/2`.
    pub fn symmetrized(&self) -> Result<Self> {
        if !self.is_square() {
            return Err(Error::ShapeMismatch(format!(
                "expected a square matrix, got {}x{}",
                self.rows(),
                self.cols()
            )));
        }
        let tolerance = HERMITIAN_RTOL * self.max_abs();
        let deviation = self.hermitian_deviation();
        if deviation > tolerance {
            return Err(Error::NotHermitian {
                deviation,
                tolerance,
            });
        }
        Ok(Self((&self.0 + self.0.adjoint()).scale(0.5)))
    }

    /// `max |M - N|` entrywise.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        (&self.0 - &other.0)
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max)
    }

    /// Column-stacking vectorization.
    pub fn vec_columns(&self) -> Vec<C64> {
        self.0.iter().copied().collect()
    }

    pub fn from_columns_vec(rows: usize, cols: usize, data: &[C64]) -> Self {
        Self(DMatrix::from_column_slice(rows, cols, data))
    }
}

impl fmt::Debug for ComplexMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ComplexMatrix{}", self.0)
    }
}

impl From<ComplexMatrix> for DMatrix<C64> {
    fn from(m: ComplexMatrix) -> Self {
        m.0
    }
}

impl<'a> Add<&'a ComplexMatrix> for &'a ComplexMatrix {
    type Output = ComplexMatrix;
    fn add(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        ComplexMatrix(&self.0 + &rhs.0)
    }
}

impl<'a> Sub<&'a ComplexMatrix> for &'a ComplexMatrix {
    type Output = ComplexMatrix;
    fn sub(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        ComplexMatrix(&self.0 - &rhs.0)
    }
}

impl<'a> Mul<&'a ComplexMatrix> for &'a ComplexMatrix {
    type Output = ComplexMatrix;
    fn mul(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        ComplexMatrix(&self.0 * &rhs.0)
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MatrixJson {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    dim: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    rows: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    cols: Option<usize>,
    entries: Vec<Vec<[f64; 2]>>,
}

impl Serialize for ComplexMatrix {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let entries = (0..self.rows())
            .map(|i| {
                (0..self.cols())
                    .map(|j| {
                        let z = self.0[(i, j)];
                        [z.re, z.im]
                    })
                    .collect()
            })
            .collect();
        let json = if self.is_square() {
            MatrixJson {
                dim: Some(self.rows()),
                rows: None,
                cols: None,
                entries,
            }
        } else {
            MatrixJson {
                dim: None,
                rows: Some(self.rows()),
                cols: Some(self.cols()),
                entries,
            }
        };
        json.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for ComplexMatrix {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let json = MatrixJson::deserialize(deserializer)?;
        let (rows, cols) = match (json.dim, json.rows, json.cols) {
            (Some(n), None, None) => (n, n),
            (None, Some(r), Some(c)) => (r, c),
            _ => {
                return Err(D::Error::custom(
                    "matrix needs either \"dim\" or \"rows\"+\"cols\"",
                ))
            }
        };
        if json.entries.len() != rows || json.entries.iter().any(|r| r.len() != cols) {
            return Err(D::Error::custom(format!(
                "entries are not a {rows}x{cols} array"
            )));
        }
        let inner = DMatrix::from_fn(rows, cols, |i, j| {
            let [re, im] = json.entries[i][j];
            C64::new(re, im)
        });
        ComplexMatrix::new(inner).map_err(D::Error::custom)
    }
}

/// Subsystem dimensions of `H = H1 ⊗ H2`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(into = "[usize; 2]", try_from = "[usize; 2]")]
pub struct Dims {
    pub d1: usize,
    pub d2: usize,
}

impl Dims {
    pub fn new(d1: usize, d2: usize) -> Result<Self> {
        if d1 == 0 || d2 == 0 {
            return Err(Error::InvalidParameter(format!(
                "subsystem dimensions must be positive, got ({d1}, {d2})"
            )));
        }
        Ok(Self { d1, d2 })
    }

    pub fn total(&self) -> usize {
        self.d1 * self.d2
    }

    pub fn check(&self, m: &ComplexMatrix) -> Result<()> {
        if !m.is_square() || m.dim() != self.total() {
            return Err(Error::DimensionMismatch {
                expected: self.total(),
                found: m.rows(),
            });
        }
        Ok(())
    }
}

impl From<Dims> for [usize; 2] {
    fn from(d: Dims) -> Self {
        [d.d1, d.d2]
    }
}

impl TryFrom<[usize; 2]> for Dims {
    type Error = Error;
    fn try_from(d: [usize; 2]) -> Result<Self> {
        Dims::new(d[0], d[1])
    }
}

/// Which tensor factor an operation acts on.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Subsystem {
    First,
    Second,
}

/// Spectral decomposition `M = V diag(values) V†` of a Hermitian matrix.
#[derive(Clone, Debug)]
pub struct HermitianEigen {
    /// Ascending.
    pub values: Vec<f64>,
    /// Columns are the matching orthonormal eigenvectors.
    pub vectors: ComplexMatrix,
}

impl HermitianEigen {
    pub fn min(&self) -> f64 {
        self.values.first().copied().unwrap_or(0.0)
    }

    pub fn max(&self) -> f64 {
        self.values.last().copied().unwrap_or(0.0)
    }

    /// `V diag(g(λ)) V†` for already-evaluated spectral values.
    pub fn recompose(&self, mapped: &[f64]) -> ComplexMatrix {
        let v = &self.vectors.0;
        let n = v.nrows();
        let mut out = DMatrix::zeros(n, n);
        for (k, &w) in mapped.iter().enumerate() {
            if w == 0.0 {
                continue;
            }
            let col = v.column(k);
            for j in 0..n {
                let cj = col[j].conj() * w;
                for i in 0..n {
                    out[(i, j)] += col[i] * cj;
                }
            }
        }
        ComplexMatrix(out)
    }

    pub fn vector(&self, k: usize) -> Vec<C64> {
        self.vectors.0.column(k).iter().copied().collect()
    }
}

/// Eigendecomposition of a Hermitian matrix, eigenvalues ascending.
///
/// The input is symmetrized as `(M + M†)/2` after passing the Hermiticity
/// check, so roundoff-level asymmetry from upstream arithmetic is absorbed.
pub fn hermitian_eig(m: &ComplexMatrix) -> Result<HermitianEigen> {
    let sym = m.symmetrized()?;
    let n = sym.dim();
    if n == 0 {
        return Ok(HermitianEigen {
            values: vec![],
            vectors: ComplexMatrix::zeros(0, 0),
        });
    }
    let eig = SymmetricEigen::new(sym.0);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let vectors = DMatrix::from_fn(n, n, |i, j| eig.eigenvectors[(i, order[j])]);
    Ok(HermitianEigen {
        values,
        vectors: ComplexMatrix(vectors),
    })
}

/// `f(M)` through the spectral resolution of a Hermitian `M`.
///
/// Fails with [`Error::DomainError`] when `f` returns a non-finite value on
/// some eigenvalue; callers that want conventions such as `0·ln 0 = 0` encode
/// them in `f`.
pub fn matrix_func(m: &ComplexMatrix, f: impl Fn(f64) -> f64) -> Result<ComplexMatrix> {
    let eig = hermitian_eig(m)?;
    let mut mapped = Vec::with_capacity(eig.values.len());
    for &lambda in &eig.values {
        let y = f(lambda);
        if !y.is_finite() {
            return Err(Error::DomainError { eigenvalue: lambda });
        }
        mapped.push(y);
    }
    Ok(eig.recompose(&mapped))
}

/// Largest singular value.
pub fn op_norm(m: &ComplexMatrix) -> f64 {
    if m.rows() == 0 || m.cols() == 0 {
        return 0.0;
    }
    m.0.singular_values().iter().copied().fold(0.0, f64::max)
}

/// Kronecker product `M ⊗ N`.
pub fn kron(m: &ComplexMatrix, n: &ComplexMatrix) -> ComplexMatrix {
    ComplexMatrix(m.0.kronecker(&n.0))
}

/// Traces out `which`, leaving an operator on the other factor.
pub fn partial_trace(m: &ComplexMatrix, dims: Dims, which: Subsystem) -> Result<ComplexMatrix> {
    dims.check(m)?;
    let Dims { d1, d2 } = dims;
    let out = match which {
        Subsystem::Second => DMatrix::from_fn(d1, d1, |i1, j1| {
            (0..d2).map(|k| m.0[(i1 * d2 + k, j1 * d2 + k)]).sum()
        }),
        Subsystem::First => DMatrix::from_fn(d2, d2, |i2, j2| {
            (0..d1).map(|k| m.0[(k * d2 + i2, k * d2 + j2)]).sum()
        }),
    };
    Ok(ComplexMatrix(out))
}

/// Transposes the indices of `which`. A pure entry permutation, so applying
/// it twice returns the input bit for bit.
pub fn partial_transpose(m: &ComplexMatrix, dims: Dims, which: Subsystem) -> Result<ComplexMatrix> {
    dims.check(m)?;
    let Dims { d1: _, d2 } = dims;
    let n = dims.total();
    let out = DMatrix::from_fn(n, n, |r, c| {
        let (i1, i2) = (r / d2, r % d2);
        let (j1, j2) = (c / d2, c % d2);
        match which {
            Subsystem::Second => m.0[(i1 * d2 + j2, j1 * d2 + i2)],
            Subsystem::First => m.0[(j1 * d2 + i2, i1 * d2 + j2)],
        }
    });
    Ok(ComplexMatrix(out))
}

/// Haar-distributed isometry `C^cols -> C^rows` (`rows >= cols`): QR of a
/// Ginibre matrix with the phases of `R`'s diagonal moved into `Q`.
pub fn haar_isometry<R: rand::Rng + ?Sized>(
    rng: &mut R,
    rows: usize,
    cols: usize,
) -> ComplexMatrix {
    assert!(rows >= cols, "isometry needs rows >= cols");
    orthonormalize_columns(&ComplexMatrix(crate::rng::ginibre(rng, rows, cols)))
}

/// Q factor of `M = QR` with the phases of `R`'s diagonal moved into `Q`,
/// which makes the factorization unique for full-rank `M`.
pub fn orthonormalize_columns(m: &ComplexMatrix) -> ComplexMatrix {
    let (rows, cols) = (m.rows(), m.cols());
    let qr = m.0.clone().qr();
    let mut q = qr.q();
    let r = qr.r();
    for k in 0..cols {
        let d = r[(k, k)];
        let phase = if d.norm() > 0.0 { d / d.norm() } else { ONE };
        for i in 0..rows {
            q[(i, k)] *= phase;
        }
    }
    ComplexMatrix(q)
}

/// `max |U†U - I|` entrywise.
pub fn unitarity_deviation(u: &ComplexMatrix) -> f64 {
    if !u.is_square() {
        return f64::INFINITY;
    }
    (&u.adjoint() * u).max_abs_diff(&ComplexMatrix::identity(u.dim()))
}
