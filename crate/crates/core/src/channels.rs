//! Completely positive trace-preserving maps in Kraus form, their Choi and
//! superoperator representations, and a few generators.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{haar_isometry, hermitian_eig, kron, op_norm, ComplexMatrix, C64, ONE, ZERO};
use crate::rng::{simplex_point, stream_rng, streams};
use crate::states::{validate_density, DensityMatrix};

/// Maximum entrywise deviation of `Σ V†V` from the identity.
pub const COMPLETENESS_TOLERANCE: f64 = 1e-9;

/// A linear map on operators that can be evaluated on arbitrary matrices.
pub trait LinearMap {
    fn in_dim(&self) -> usize;
    fn out_dim(&self) -> usize;
    fn apply_operator(&self, x: &ComplexMatrix) -> ComplexMatrix;

    /// `‖Φ(I)‖_∞`, the norm of a positive map.
    fn map_norm(&self) -> f64 {
        op_norm(&self.apply_operator(&ComplexMatrix::identity(self.in_dim())))
    }

    /// Largest `|Tr Φ(E_kl) - δ_kl|` over matrix units.
    fn trace_deviation(&self) -> f64 {
        let n = self.in_dim();
        let mut worst = 0.0f64;
        for k in 0..n {
            for l in 0..n {
                let e = matrix_unit(n, k, l);
                let t = self.apply_operator(&e).trace();
                let expected = if k == l { ONE } else { ZERO };
                worst = worst.max((t - expected).norm());
            }
        }
        worst
    }
}

fn matrix_unit(n: usize, k: usize, l: usize) -> ComplexMatrix {
    ComplexMatrix::from_fn(n, n, |i, j| if i == k && j == l { ONE } else { ZERO })
}

/// A CPTP map `σ ↦ Σ_i V_i σ V_i†` with `Σ_i V_i†V_i = I`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ChannelJson", into = "ChannelJson")]
pub struct KrausChannel {
    in_dim: usize,
    out_dim: usize,
    kraus: Vec<ComplexMatrix>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ChannelJson {
    in_dim: usize,
    out_dim: usize,
    kraus: Vec<ComplexMatrix>,
}

impl TryFrom<ChannelJson> for KrausChannel {
    type Error = Error;
    fn try_from(j: ChannelJson) -> Result<Self> {
        let ch = new_kraus(j.kraus)?;
        if ch.in_dim != j.in_dim || ch.out_dim != j.out_dim {
            return Err(Error::ShapeMismatch(format!(
                "declared {}->{} but Kraus operators are {}x{}",
                j.in_dim, j.out_dim, ch.out_dim, ch.in_dim
            )));
        }
        Ok(ch)
    }
}

impl From<KrausChannel> for ChannelJson {
    fn from(c: KrausChannel) -> Self {
        ChannelJson {
            in_dim: c.in_dim,
            out_dim: c.out_dim,
            kraus: c.kraus,
        }
    }
}

/// `‖Σ V_i†V_i - I‖_∞` for a list of equally shaped operators.
pub fn completeness_deviation(ops: &[ComplexMatrix]) -> f64 {
    let Some(first) = ops.first() else {
        return f64::INFINITY;
    };
    let n = first.cols();
    let mut sum = ComplexMatrix::zeros(n, n);
    for v in ops {
        sum = &sum + &(&v.adjoint() * v);
    }
    sum.max_abs_diff(&ComplexMatrix::identity(n))
}

/// Builds a channel, checking shapes and trace preservation.
pub fn new_kraus(ops: Vec<ComplexMatrix>) -> Result<KrausChannel> {
    let Some(first) = ops.first() else {
        return Err(Error::ShapeMismatch("empty Kraus list".into()));
    };
    let (out_dim, in_dim) = (first.rows(), first.cols());
    if in_dim == 0 || out_dim == 0 {
        return Err(Error::ShapeMismatch("zero-sized Kraus operator".into()));
    }
    if let Some(bad) = ops
        .iter()
        .find(|v| v.rows() != out_dim || v.cols() != in_dim)
    {
        return Err(Error::ShapeMismatch(format!(
            "Kraus operators must all be {out_dim}x{in_dim}, found {}x{}",
            bad.rows(),
            bad.cols()
        )));
    }
    let deviation = completeness_deviation(&ops);
    if deviation > COMPLETENESS_TOLERANCE {
        return Err(Error::NotTracePreserving { deviation });
    }
    Ok(KrausChannel {
        in_dim,
        out_dim,
        kraus: ops,
    })
}

impl KrausChannel {
    pub fn in_dim(&self) -> usize {
        self.in_dim
    }

    pub fn out_dim(&self) -> usize {
        self.out_dim
    }

    pub fn kraus(&self) -> &[ComplexMatrix] {
        &self.kraus
    }

    /// `Θ(σ)`, validated as a state. The bipartite dimensions carry over
    /// when input and output spaces agree.
    pub fn apply(&self, state: &DensityMatrix) -> Result<DensityMatrix> {
        if state.dim() != self.in_dim {
            return Err(Error::DimensionMismatch {
                expected: self.in_dim,
                found: state.dim(),
            });
        }
        let out = self.apply_operator(state.matrix());
        let dims = if self.in_dim == self.out_dim {
            state.dims()
        } else {
            None
        };
        validate_density(&out, dims)
    }
}

impl LinearMap for KrausChannel {
    fn in_dim(&self) -> usize {
        self.in_dim
    }

    fn out_dim(&self) -> usize {
        self.out_dim
    }

    fn apply_operator(&self, x: &ComplexMatrix) -> ComplexMatrix {
        let mut out = ComplexMatrix::zeros(self.out_dim, self.out_dim);
        for v in &self.kraus {
            out = &out + &(&(v * x) * &v.adjoint());
        }
        out
    }

    fn map_norm(&self) -> f64 {
        channel_norm(self)
    }
}

/// Unnormalized Choi matrix `Σ_kl E_kl ⊗ Θ(E_kl)`; the first tensor factor
/// carries the input index.
pub fn choi(channel: &KrausChannel) -> ComplexMatrix {
    let (n, m) = (channel.in_dim, channel.out_dim);
    let mut c = ComplexMatrix::zeros(n * m, n * m);
    for k in 0..n {
        for l in 0..n {
            let e = matrix_unit(n, k, l);
            let block = channel.apply_operator(&e);
            c = &c + &kron(&e, &block);
        }
    }
    c
}

/// Result of a complete-positivity test on a Choi matrix.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CpReport {
    pub completely_positive: bool,
    pub min_eigenvalue: f64,
}

/// A map is CP iff its Choi matrix is PSD; the threshold is
/// `-1e-9·max(1, ‖C‖_∞)`.
pub fn is_cp(choi: &ComplexMatrix) -> Result<CpReport> {
    let min_eigenvalue = hermitian_eig(choi)?.min();
    let threshold = -1e-9 * choi.max_abs().max(1.0);
    Ok(CpReport {
        completely_positive: min_eigenvalue >= threshold,
        min_eigenvalue,
    })
}

/// `Θ(I) = Σ V_i V_i†`.
pub fn image_of_identity(channel: &KrausChannel) -> ComplexMatrix {
    let mut out = ComplexMatrix::zeros(channel.out_dim, channel.out_dim);
    for v in &channel.kraus {
        out = &out + &(v * &v.adjoint());
    }
    out
}

/// `‖Θ‖ := ‖Θ(I)‖_∞`, the operator norm of a positive map. The
/// counterexample channel has norm 2.
pub fn channel_norm(channel: &KrausChannel) -> f64 {
    op_norm(&image_of_identity(channel))
}

pub fn is_unital(channel: &KrausChannel) -> bool {
    channel.in_dim == channel.out_dim
        && image_of_identity(channel).max_abs_diff(&ComplexMatrix::identity(channel.out_dim))
            <= COMPLETENESS_TOLERANCE
}

/// Random channel on `C^d` with `k` Kraus operators: the `d × d` blocks of a
/// Haar isometry `C^d -> C^{dk}`.
pub fn random_channel(d: usize, k: usize, seed: u64) -> Result<KrausChannel> {
    if d == 0 || k == 0 {
        return Err(Error::InvalidParameter(format!(
            "need d >= 1 and k >= 1, got d={d}, k={k}"
        )));
    }
    let mut rng = stream_rng(seed, streams::CHANNEL);
    Ok(random_channel_from(&mut rng, d, k))
}

pub(crate) fn random_channel_from<R: rand::Rng + ?Sized>(
    rng: &mut R,
    d: usize,
    k: usize,
) -> KrausChannel {
    let iso = haar_isometry(rng, d * k, d);
    from_isometry(&iso, d, k)
}

/// Splits a `(dk) × d` isometry into `k` Kraus blocks, block `i` taking rows
/// `i·d .. (i+1)·d`.
pub(crate) fn from_isometry(iso: &ComplexMatrix, d: usize, k: usize) -> KrausChannel {
    let kraus = (0..k)
        .map(|i| ComplexMatrix::from_fn(d, d, |r, c| iso.get(i * d + r, c)))
        .collect();
    KrausChannel {
        in_dim: d,
        out_dim: d,
        kraus,
    }
}

/// Stacks the Kraus operators into the isometry `[V_1; V_2; ...]`.
pub(crate) fn stacked_isometry(channel: &KrausChannel) -> ComplexMatrix {
    let (d, k) = (channel.in_dim, channel.kraus.len());
    let m = channel.out_dim;
    ComplexMatrix::from_fn(m * k, d, |r, c| channel.kraus[r / m].get(r % m, c))
}

/// The 4×4 counterexample: `Θσ = AσA† + BσB†` with the states
/// `σ = diag(1/2,1/2,0,0)` and `ρ = diag(0,0,1/2,1/2)`.
///
/// `A` maps `e1 -> e2` and `e3 -> e4`; `B` projects onto `e2, e4`. Every entry
/// is an exact binary fraction, so all downstream arithmetic on this triple
/// is exact in double precision.
pub fn paper_counterexample() -> (KrausChannel, DensityMatrix, DensityMatrix) {
    let a = ComplexMatrix::from_real_rows(&[
        &[0.0, 0.0, 0.0, 0.0],
        &[1.0, 0.0, 0.0, 0.0],
        &[0.0, 0.0, 0.0, 0.0],
        &[0.0, 0.0, 1.0, 0.0],
    ]);
    let b = ComplexMatrix::from_real_diagonal(&[0.0, 1.0, 0.0, 1.0]);
    let channel = new_kraus(vec![a, b]).expect("A†A + B†B = I");
    let sigma = crate::states::standard_state(crate::states::StandardState::PaperSigma)
        .expect("valid state");
    let rho =
        crate::states::standard_state(crate::states::StandardState::PaperRho).expect("valid state");
    (channel, sigma, rho)
}

/// `[A_i ⊗ B_i]`. Completeness is not implied; feed the result to
/// [`new_kraus`] to check it.
pub fn local_product_family(
    a_ops: &[ComplexMatrix],
    b_ops: &[ComplexMatrix],
) -> Result<Vec<ComplexMatrix>> {
    if a_ops.len() != b_ops.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} A operators but {} B operators",
            a_ops.len(),
            b_ops.len()
        )));
    }
    if a_ops.is_empty() {
        return Err(Error::ShapeMismatch("empty operator family".into()));
    }
    let shape = |m: &ComplexMatrix| (m.rows(), m.cols());
    let (sa, sb) = (shape(&a_ops[0]), shape(&b_ops[0]));
    if a_ops.iter().any(|a| shape(a) != sa) || b_ops.iter().any(|b| shape(b) != sb) {
        return Err(Error::ShapeMismatch(
            "operators within each factor must share a shape".into(),
        ));
    }
    Ok(a_ops.iter().zip(b_ops).map(|(a, b)| kron(a, b)).collect())
}

/// Matrix of a linear map acting on column-stacked operators:
/// `vec(Φ(X)) = S · vec(X)`.
#[derive(Clone, Debug, PartialEq)]
pub struct SuperOperator {
    in_dim: usize,
    out_dim: usize,
    matrix: ComplexMatrix,
}

impl SuperOperator {
    /// Wraps an explicit `out² × in²` matrix. Positivity of the map is the
    /// caller's claim; nothing here certifies it.
    pub fn from_matrix(in_dim: usize, out_dim: usize, matrix: ComplexMatrix) -> Result<Self> {
        if matrix.rows() != out_dim * out_dim || matrix.cols() != in_dim * in_dim {
            return Err(Error::ShapeMismatch(format!(
                "superoperator for {in_dim}->{out_dim} must be {}x{}, got {}x{}",
                out_dim * out_dim,
                in_dim * in_dim,
                matrix.rows(),
                matrix.cols()
            )));
        }
        Ok(Self {
            in_dim,
            out_dim,
            matrix,
        })
    }

    /// The transpose map `X ↦ Xᵀ`: positive and trace preserving, not CP.
    pub fn transpose_map(d: usize) -> Self {
        let n = d * d;
        // vec index of (i, j) is j*d + i.
        let matrix = ComplexMatrix::from_fn(n, n, |r, c| {
            let (ri, rj) = (r % d, r / d);
            let (ci, cj) = (c % d, c / d);
            if ri == cj && rj == ci {
                ONE
            } else {
                ZERO
            }
        });
        Self {
            in_dim: d,
            out_dim: d,
            matrix,
        }
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }
}

impl LinearMap for SuperOperator {
    fn in_dim(&self) -> usize {
        self.in_dim
    }

    fn out_dim(&self) -> usize {
        self.out_dim
    }

    fn apply_operator(&self, x: &ComplexMatrix) -> ComplexMatrix {
        let v = ComplexMatrix::from_columns_vec(self.in_dim * self.in_dim, 1, &x.vec_columns());
        let out = &self.matrix * &v;
        ComplexMatrix::from_columns_vec(self.out_dim, self.out_dim, &out.vec_columns())
    }
}

/// `Σ_i conj(V_i) ⊗ V_i`, the column-stacking superoperator.
pub fn to_superoperator(channel: &KrausChannel) -> SuperOperator {
    let (n, m) = (channel.in_dim, channel.out_dim);
    let mut s = ComplexMatrix::zeros(m * m, n * n);
    for v in &channel.kraus {
        s = &s + &kron(&v.conjugate(), v);
    }
    SuperOperator {
        in_dim: n,
        out_dim: m,
        matrix: s,
    }
}

/// `Θ₂ ∘ Θ₁` with Kraus set `{W_j V_i}`.
pub fn compose(second: &KrausChannel, first: &KrausChannel) -> Result<KrausChannel> {
    if first.out_dim != second.in_dim {
        return Err(Error::DimensionMismatch {
            expected: second.in_dim,
            found: first.out_dim,
        });
    }
    let kraus = second
        .kraus
        .iter()
        .flat_map(|w| first.kraus.iter().map(move |v| w * v))
        .collect();
    Ok(KrausChannel {
        in_dim: first.in_dim,
        out_dim: second.out_dim,
        kraus,
    })
}

pub fn identity_channel(d: usize) -> KrausChannel {
    KrausChannel {
        in_dim: d,
        out_dim: d,
        kraus: vec![ComplexMatrix::identity(d)],
    }
}

pub fn unitary_channel(u: &ComplexMatrix) -> Result<KrausChannel> {
    new_kraus(vec![u.clone()])
}

/// Weyl operators `X^a Z^b` on `C^d`, ordered by `a·d + b`.
pub fn weyl_operators(d: usize) -> Vec<ComplexMatrix> {
    let omega = |k: usize| C64::from_polar(1.0, 2.0 * std::f64::consts::PI * k as f64 / d as f64);
    let mut out = Vec::with_capacity(d * d);
    for a in 0..d {
        for b in 0..d {
            // (X^a Z^b)|j> = ω^{bj} |j + a>
            out.push(ComplexMatrix::from_fn(d, d, |r, c| {
                if r == (c + a) % d {
                    omega((b * c) % d)
                } else {
                    ZERO
                }
            }));
        }
    }
    out
}

/// Depolarizing channel `X ↦ λX + (1-λ)·Tr(X)·I/d`, as a mixture of Weyl
/// unitaries. Completely positive for `λ ∈ [-1/(d²-1), 1]`.
pub fn depolarizing(d: usize, lambda: f64) -> Result<KrausChannel> {
    if d == 0 {
        return Err(Error::InvalidParameter("dimension must be positive".into()));
    }
    let d2 = (d * d) as f64;
    let lower = if d == 1 {
        -f64::INFINITY
    } else {
        -1.0 / (d2 - 1.0)
    };
    if !(lower..=1.0).contains(&lambda) {
        return Err(Error::InvalidParameter(format!(
            "depolarizing parameter {lambda} outside [{lower}, 1]"
        )));
    }
    let p0 = lambda + (1.0 - lambda) / d2;
    let q = (1.0 - lambda) / d2;
    let kraus = weyl_operators(d)
        .into_iter()
        .enumerate()
        .map(|(i, w)| w.scale(if i == 0 { p0 } else { q }.max(0.0).sqrt()))
        .collect();
    new_kraus(kraus)
}

/// Qubit amplitude damping with decay probability `γ`.
pub fn amplitude_damping(gamma: f64) -> Result<KrausChannel> {
    if !(0.0..=1.0).contains(&gamma) {
        return Err(Error::InvalidParameter(format!(
            "damping {gamma} outside [0, 1]"
        )));
    }
    new_kraus(vec![
        ComplexMatrix::from_real_rows(&[&[1.0, 0.0], &[0.0, (1.0 - gamma).sqrt()]]),
        ComplexMatrix::from_real_rows(&[&[0.0, gamma.sqrt()], &[0.0, 0.0]]),
    ])
}

/// Haar-random unitary on `C^d`.
pub fn random_unitary(d: usize, seed: u64) -> ComplexMatrix {
    let mut rng = stream_rng(seed, streams::UNITARY);
    haar_isometry(&mut rng, d, d)
}

/// `Σ p_i U_i · U_i†` with `n` Haar unitaries and flat-Dirichlet weights.
/// Always unital.
pub fn mixture_of_unitaries(d: usize, n: usize, seed: u64) -> Result<KrausChannel> {
    if d == 0 || n == 0 {
        return Err(Error::InvalidParameter(format!(
            "need d >= 1 and n >= 1, got d={d}, n={n}"
        )));
    }
    let mut rng = stream_rng(seed, streams::UNITARY + 1);
    Ok(mixture_of_unitaries_from(&mut rng, d, n))
}

pub(crate) fn mixture_of_unitaries_from<R: rand::Rng + ?Sized>(
    rng: &mut R,
    d: usize,
    n: usize,
) -> KrausChannel {
    let weights = simplex_point(rng, n);
    let kraus = weights
        .iter()
        .map(|&p| haar_isometry(rng, d, d).scale(p.sqrt()))
        .collect();
    KrausChannel {
        in_dim: d,
        out_dim: d,
        kraus,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::unitarity_deviation;
    use crate::states::{purity, random_density, standard_state, StandardState};

    fn bell_projector() -> ComplexMatrix {
        standard_state(StandardState::Bell)
            .unwrap()
            .matrix()
            .clone()
    }

    #[test]
    fn counterexample_kraus_pair() {
        let (ch, sigma, rho) = paper_counterexample();
        let a = &ch.kraus()[0];
        assert_eq!(
            &a.adjoint() * a,
            ComplexMatrix::from_real_diagonal(&[1.0, 0.0, 1.0, 0.0])
        );
        assert_eq!(completeness_deviation(ch.kraus()), 0.0);
        assert_eq!(
            ch.apply(&sigma).unwrap().matrix(),
            &ComplexMatrix::from_real_diagonal(&[0.0, 1.0, 0.0, 0.0])
        );
        assert_eq!(
            ch.apply(&rho).unwrap().matrix(),
            &ComplexMatrix::from_real_diagonal(&[0.0, 0.0, 0.0, 1.0])
        );
        assert_eq!(
            image_of_identity(&ch),
            ComplexMatrix::from_real_diagonal(&[0.0, 2.0, 0.0, 2.0])
        );
        assert_eq!(channel_norm(&ch), 2.0);
        assert!(!is_unital(&ch));
    }

    #[test]
    fn new_kraus_errors() {
        assert!(new_kraus(vec![ComplexMatrix::identity(3)]).is_ok());
        assert!(matches!(
            new_kraus(vec![ComplexMatrix::identity(2).scale(0.5)]),
            Err(Error::NotTracePreserving { deviation }) if (deviation - 0.75).abs() < 1e-15
        ));
        assert!(matches!(
            new_kraus(vec![ComplexMatrix::identity(2), ComplexMatrix::identity(3)]),
            Err(Error::ShapeMismatch(_))
        ));
        assert!(matches!(new_kraus(vec![]), Err(Error::ShapeMismatch(_))));
    }

    #[test]
    fn apply_dimension_mismatch() {
        let s = random_density(3, 3, 1).unwrap();
        assert!(matches!(
            identity_channel(2).apply(&s),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn identity_channel_is_trivial() {
        let s = random_density(3, 3, 9).unwrap();
        assert!(
            identity_channel(3)
                .apply(&s)
                .unwrap()
                .matrix()
                .max_abs_diff(s.matrix())
                < 1e-15
        );
        assert!(is_unital(&identity_channel(3)));
        assert!((channel_norm(&identity_channel(3)) - 1.0).abs() < 1e-14);
    }

    #[test]
    fn choi_examples() {
        let c = choi(&identity_channel(2));
        let expected = bell_projector().scale(2.0);
        assert!(c.max_abs_diff(&expected) < 1e-15);
        let e = hermitian_eig(&c).unwrap();
        assert!((e.max() - 2.0).abs() < 1e-14);
        assert!(e.values[..3].iter().all(|x| x.abs() < 1e-14));

        let dep = depolarizing(2, 0.0).unwrap();
        let c = choi(&dep);
        assert!(c.max_abs_diff(&ComplexMatrix::identity(4).scale(0.5)) < 1e-15);

        for seed in 0..5 {
            let ch = random_channel(3, 2, seed).unwrap();
            assert!((choi(&ch).trace().re - 3.0).abs() < 1e-12);
        }
    }

    #[test]
    fn is_cp_examples() {
        for seed in 0..10 {
            let ch = random_channel(2 + seed as usize % 3, 3, seed).unwrap();
            assert!(is_cp(&choi(&ch)).unwrap().completely_positive);
        }
        // Choi of transpose is SWAP.
        let swap = ComplexMatrix::from_real_rows(&[
            &[1.0, 0.0, 0.0, 0.0],
            &[0.0, 0.0, 1.0, 0.0],
            &[0.0, 1.0, 0.0, 0.0],
            &[0.0, 0.0, 0.0, 1.0],
        ]);
        let r = is_cp(&swap).unwrap();
        assert!(!r.completely_positive);
        assert!((r.min_eigenvalue + 1.0).abs() < 1e-14);
        assert!(
            is_cp(&ComplexMatrix::zeros(4, 4))
                .unwrap()
                .completely_positive
        );
        let skew = ComplexMatrix::from_real_rows(&[&[0.0, 1.0], &[0.0, 0.0]]);
        assert!(matches!(is_cp(&skew), Err(Error::NotHermitian { .. })));
    }

    #[test]
    fn transpose_map_choi_is_swap() {
        let t = SuperOperator::transpose_map(2);
        let mut c = ComplexMatrix::zeros(4, 4);
        for k in 0..2 {
            for l in 0..2 {
                let e = matrix_unit(2, k, l);
                c = &c + &kron(&e, &t.apply_operator(&e));
            }
        }
        assert!(!is_cp(&c).unwrap().completely_positive);
        let x = ComplexMatrix::from_rows(&[vec![ONE, C64::new(0.0, 2.0)], vec![ZERO, ONE]]);
        assert_eq!(t.apply_operator(&x), x.transpose());
    }

    #[test]
    fn channel_norm_examples() {
        let gamma = 0.3;
        let ad = amplitude_damping(gamma).unwrap();
        assert!((channel_norm(&ad) - (1.0 + gamma)).abs() < 1e-14);
        let mix = mixture_of_unitaries(3, 4, 5).unwrap();
        assert!(is_unital(&mix));
        assert!((channel_norm(&mix) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn random_channel_properties() {
        for seed in 0..20u64 {
            let d = 2 + seed as usize % 3;
            let k = 1 + seed as usize % 4;
            let ch = random_channel(d, k, seed).unwrap();
            assert!(completeness_deviation(ch.kraus()) <= 1e-10);
            assert!(channel_norm(&ch) >= 1.0 - 1e-12);
            let s = random_density(d, d, seed + 100).unwrap();
            assert!(ch.apply(&s).is_ok());
        }
        let a = random_channel(3, 2, 77).unwrap();
        let b = random_channel(3, 2, 77).unwrap();
        assert_eq!(a, b);
        assert!(random_channel(3, 0, 1).is_err());
    }

    #[test]
    fn single_kraus_random_channel_is_unitary() {
        let ch = random_channel(4, 1, 11).unwrap();
        assert!(unitarity_deviation(&ch.kraus()[0]) < 1e-12);
        let s = random_density(4, 4, 2).unwrap();
        assert!((purity(&ch.apply(&s).unwrap()) - purity(&s)).abs() < 1e-9);
    }

    #[test]
    fn local_product_family_examples() {
        let i2 = ComplexMatrix::identity(2);
        let fam =
            local_product_family(std::slice::from_ref(&i2), std::slice::from_ref(&i2)).unwrap();
        assert_eq!(fam, vec![ComplexMatrix::identity(4)]);
        let p0 = ComplexMatrix::from_real_diagonal(&[1.0, 0.0]);
        let p1 = ComplexMatrix::from_real_diagonal(&[0.0, 1.0]);
        let fam = local_product_family(&[p0, p1], &[i2.clone(), i2.clone()]).unwrap();
        assert!(new_kraus(fam).is_ok());
        assert!(matches!(
            local_product_family(&[i2.clone()], &[i2.clone(), i2]),
            Err(Error::ShapeMismatch(_))
        ));
    }

    #[test]
    fn superoperator_examples() {
        let id = to_superoperator(&identity_channel(3));
        assert_eq!(id.matrix(), &ComplexMatrix::identity(9));

        let (ch, sigma, _) = paper_counterexample();
        let s = to_superoperator(&ch);
        assert_eq!(
            s.apply_operator(sigma.matrix()),
            ComplexMatrix::from_real_diagonal(&[0.0, 1.0, 0.0, 0.0])
        );

        let lambda = 0.37;
        let dep = to_superoperator(&depolarizing(3, lambda).unwrap());
        let x = ComplexMatrix::from_rows(&[
            vec![C64::new(1.0, 0.0), C64::new(0.2, 0.5), ZERO],
            vec![C64::new(0.2, -0.5), C64::new(-0.4, 0.0), C64::new(0.0, 1.0)],
            vec![ZERO, C64::new(0.0, -1.0), C64::new(-0.6, 0.0)],
        ]);
        assert!(dep.apply_operator(&x).max_abs_diff(&x.scale(lambda)) < 1e-14);
    }

    #[test]
    fn superoperator_agrees_with_kraus() {
        for seed in 0..100u64 {
            let d = 2 + seed as usize % 3;
            let ch = random_channel(d, 1 + seed as usize % 3, seed).unwrap();
            let s = random_density(d, d, seed).unwrap();
            let via_kraus = ch.apply_operator(s.matrix());
            let via_super = to_superoperator(&ch).apply_operator(s.matrix());
            assert!(via_kraus.max_abs_diff(&via_super) <= 1e-10);
        }
    }

    #[test]
    fn compose_examples() {
        let th = random_channel(3, 2, 4).unwrap();
        let id = identity_channel(3);
        let s = random_density(3, 3, 8).unwrap();
        let c = compose(&id, &th).unwrap();
        assert!(
            c.apply_operator(s.matrix())
                .max_abs_diff(&th.apply_operator(s.matrix()))
                < 1e-12
        );

        let th2 = random_channel(3, 3, 5).unwrap();
        let c = compose(&th2, &th).unwrap();
        assert_eq!(c.kraus().len(), 6);
        let seq = th2.apply_operator(&th.apply_operator(s.matrix()));
        assert!(c.apply_operator(s.matrix()).max_abs_diff(&seq) <= 1e-10);

        let u1 = mixture_of_unitaries(3, 2, 1).unwrap();
        let u2 = mixture_of_unitaries(3, 3, 2).unwrap();
        assert!(is_unital(&compose(&u2, &u1).unwrap()));
        assert!(matches!(
            compose(&identity_channel(2), &th),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn depolarizing_range() {
        assert!(depolarizing(2, -1.0 / 3.0).is_ok());
        assert!(depolarizing(2, -0.5).is_err());
        assert!(depolarizing(2, 1.5).is_err());
    }

    #[test]
    fn channel_json_round_trip() {
        let ch = random_channel(2, 2, 3).unwrap();
        let text = serde_json::to_string(&ch).unwrap();
        let back: KrausChannel = serde_json::from_str(&text).unwrap();
        assert_eq!(back, ch);
        let bad = r#"{"in_dim":2,"out_dim":2,"kraus":[{"dim":2,"entries":[[[0.5,0],[0,0]],[[0,0],[0.5,0]]]}]}"#;
        assert!(serde_json::from_str::<KrausChannel>(bad).is_err());
    }

    #[test]
    fn trace_deviation_of_maps() {
        assert!(SuperOperator::transpose_map(3).trace_deviation() < 1e-15);
        assert!(random_channel(3, 2, 1).unwrap().trace_deviation() < 1e-12);
    }
}
