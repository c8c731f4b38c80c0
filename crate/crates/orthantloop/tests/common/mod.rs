//! Shared generators for the integration tests.
#![allow(dead_code)]

use orthantloop::kinematics::{Dimension, KinematicConfig};
use orthantloop::matrixops::SymMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// A A^T / n + 0.5 I with Gaussian A, rescaled to diagonal entries in [0.5, 2].
pub fn random_spd(rng: &mut impl Rng, n: usize) -> SymMatrix<f64> {
    let a: Vec<f64> = (0..n * n).map(|_| rng.sample(StandardNormal)).collect();
    let base = SymMatrix::from_fn(n, |i, j| {
        let dot: f64 = (0..n).map(|k| a[i * n + k] * a[j * n + k]).sum();
        dot / n as f64 + if i == j { 0.5 } else { 0.0 }
    });
    let d: Vec<f64> = (0..n)
        .map(|i| rng.gen_range(0.7f64..1.4) / base.get(i, i).sqrt())
        .collect();
    SymMatrix::from_fn(n, |i, j| base.get(i, j) * d[i] * d[j])
}

/// Unit-diagonal version of [`random_spd`].
pub fn random_correlation(rng: &mut impl Rng, n: usize) -> SymMatrix<f64> {
    random_spd(rng, n).normalized()
}

/// Unit powers in dimension `n` with a random positive-definite Sigma.
pub fn random_config(rng: &mut impl Rng, legs: usize, n: f64) -> KinematicConfig {
    let sigma = random_spd(rng, legs);
    KinematicConfig::from_sigma(&sigma, vec![1; legs], Dimension::Fixed(n)).unwrap()
}

/// Equal masses `m`, every cosine equal to `c`.
pub fn equicorrelated(legs: usize, m: f64, c: f64, n: f64) -> KinematicConfig {
    let sigma = SymMatrix::from_fn(legs, |i, j| if i == j { m * m } else { m * m * c });
    KinematicConfig::from_sigma(&sigma, vec![1; legs], Dimension::Fixed(n)).unwrap()
}

pub fn equicorrelation(n: usize, rho: f64) -> SymMatrix<f64> {
    SymMatrix::from_fn(n, |i, j| if i == j { 1.0 } else { rho })
}

pub fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}
