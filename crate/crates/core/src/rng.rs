//! Seeded random sampling.
//!
//! Every random quantity in the crate comes from a [`ChaCha20Rng`] built by
//! [`stream_rng`]: the 64-bit user seed selects the key through
//! `seed_from_u64`, and a 64-bit stream number selects an independent
//! keystream. Parallel workers and optimizer restarts derive their stream
//! from their index, so results do not depend on thread scheduling.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;

/// Stream offsets for the different consumers of a seed. Keeping them apart
/// means e.g. `random_density(4, 4, 7)` and `random_channel(4, 2, 7)` do not
/// share Gaussian draws.
pub mod streams {
    pub const DENSITY: u64 = 0x0100_0000;
    pub const CHANNEL: u64 = 0x0200_0000;
    pub const UNITARY: u64 = 0x0300_0000;
    pub const ENSEMBLE: u64 = 0x0400_0000;
    pub const OPTIMIZER: u64 = 0x0500_0000;
    pub const SEARCH: u64 = 0x0600_0000;
    pub const SUITE: u64 = 0x0700_0000;
}

pub fn stream_rng(seed: u64, stream: u64) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Standard complex Gaussian: real and imaginary parts are independent
/// N(0, 1/2), so `E|z|^2 = 1`.
pub fn complex_normal<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

/// Ginibre matrix with independent standard complex Gaussian entries,
/// filled column by column.
pub fn ginibre<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> DMatrix<Complex64> {
    let mut m = DMatrix::zeros(rows, cols);
    for c in 0..cols {
        for r in 0..rows {
            m[(r, c)] = complex_normal(rng);
        }
    }
    m
}

/// Haar-random unit vector in C^d.
pub fn unit_vector<R: Rng + ?Sized>(rng: &mut R, d: usize) -> Vec<Complex64> {
    loop {
        let v: Vec<Complex64> = (0..d).map(|_| complex_normal(rng)).collect();
        let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm > 1e-8 {
            return v.into_iter().map(|z| z / norm).collect();
        }
    }
}

/// Uniform point on the probability simplex (flat Dirichlet).
pub fn simplex_point<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Vec<f64> {
    let draws: Vec<f64> = (0..n)
        .map(|_| {
            let u: f64 = rng.random();
            -(1.0 - u).ln()
        })
        .collect();
    let total: f64 = draws.iter().sum();
    draws.into_iter().map(|x| x / total).collect()
}
