//! Gamma-function helpers. Gamma itself comes from `statrs`; the polygamma
//! values needed for eps-series are only ever required at integers and
//! half-integers, where they reduce to zeta values.

use crate::error::{Error, Result};
use std::f64::consts::LN_2;

pub use statrs::function::gamma::{gamma, ln_gamma};

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

// zeta(2) .. zeta(10)
const ZETA: [f64; 9] = [
    1.644_934_066_848_226_4,
    1.202_056_903_159_594_3,
    1.082_323_233_711_138_2,
    1.036_927_755_143_369_9,
    1.017_343_061_984_449_1,
    1.008_349_277_381_922_8,
    1.004_077_356_197_944_3,
    1.002_008_392_826_082_2,
    1.000_994_575_127_818_1,
];

pub const MAX_POLYGAMMA_ORDER: usize = 8;

fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

/// psi^{(m)}(x) for x a positive integer or half-integer, m <= 8.
pub fn polygamma_lattice(m: usize, x: f64) -> Result<f64> {
    if m > MAX_POLYGAMMA_ORDER {
        return Err(Error::Unsupported(format!("polygamma order {m}")));
    }
    let twice = 2.0 * x;
    if !(x > 0.0) || twice.fract() != 0.0 {
        return Err(Error::Unsupported(format!(
            "polygamma only at positive integers/half-integers, got {x}"
        )));
    }
    let half = twice as i64 % 2 == 1;
    let base = if half { 0.5 } else { 1.0 };
    let sign = if m % 2 == 0 { -1.0 } else { 1.0 }; // (-1)^{m+1}
    let mut v = if m == 0 {
        if half {
            -EULER_GAMMA - 2.0 * LN_2
        } else {
            -EULER_GAMMA
        }
    } else {
        let z = ZETA[m - 1];
        let mult = if half { 2f64.powi(m as i32 + 1) - 1.0 } else { 1.0 };
        sign * factorial(m) * mult * z
    };
    // psi^{(m)}(y + 1) = psi^{(m)}(y) + (-1)^m m! / y^{m+1}
    let mut y = base;
    while y < x - 0.25 {
        let s = if m % 2 == 0 { 1.0 } else { -1.0 };
        v += s * factorial(m) / y.powi(m as i32 + 1);
        y += 1.0;
    }
    Ok(v)
}

/// Taylor coefficients g_0..g_order of 1 / Gamma(k - eps) in eps, for k a
/// positive integer or half-integer.
///
/// ln Gamma(k - eps) = ln Gamma(k) + sum_{j>=1} psi^{(j-1)}(k) (-eps)^j / j!,
/// so 1/Gamma(k - eps) = exp(-ln Gamma(k) + sum_j a_j eps^j) with
/// a_j = -(-1)^j psi^{(j-1)}(k) / j!.
pub fn inverse_gamma_series(k: f64, order: usize) -> Result<Vec<f64>> {
    let mut a = vec![0.0; order + 1];
    for j in 1..=order {
        let sign = if j % 2 == 0 { -1.0 } else { 1.0 };
        a[j] = sign * polygamma_lattice(j - 1, k)? / factorial(j);
    }
    let mut e = exp_series(&a);
    let g0 = 1.0 / gamma(k);
    for v in e.iter_mut() {
        *v *= g0;
    }
    Ok(e)
}

/// exp of a power series with zero constant term.
fn exp_series(a: &[f64]) -> Vec<f64> {
    // b' = a' b  =>  n b_n = sum_{j=1}^n j a_j b_{n-j}
    let n = a.len();
    let mut b = vec![0.0; n];
    b[0] = 1.0;
    for m in 1..n {
        let s: f64 = (1..=m).map(|j| j as f64 * a[j] * b[m - j]).sum();
        b[m] = s / m as f64;
    }
    b
}

/// Rising factorial (a)_k.
pub fn pochhammer(a: f64, k: u32) -> f64 {
    (0..k).map(|i| a + i as f64).product()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn digamma_values() {
        assert!((polygamma_lattice(0, 1.0).unwrap() + EULER_GAMMA).abs() < 1e-15);
        assert!((polygamma_lattice(0, 3.0).unwrap() - (1.5 - EULER_GAMMA)).abs() < 1e-15);
        assert!((polygamma_lattice(1, 0.5).unwrap() - std::f64::consts::PI.powi(2) / 2.0).abs() < 1e-14);
        assert!((polygamma_lattice(1, 1.5).unwrap() - (std::f64::consts::PI.powi(2) / 2.0 - 4.0)).abs() < 1e-13);
    }

    #[test]
    fn inverse_gamma_series_matches_finite_differences() {
        for &k in &[0.5, 1.0, 1.5, 2.0] {
            let g = inverse_gamma_series(k, 3).unwrap();
            let h = 1e-3;
            let f = |e: f64| 1.0 / gamma(k - e);
            let d1 = (f(h) - f(-h)) / (2.0 * h);
            let d2 = (f(h) - 2.0 * f(0.0) + f(-h)) / (h * h);
            assert!((g[0] - f(0.0)).abs() < 1e-13);
            assert!((g[1] - d1).abs() < 1e-6, "k={k}");
            assert!((g[2] - d2 / 2.0).abs() < 1e-5, "k={k}");
        }
    }
}
