use super::{contour_abscissa, ErrorSlot};
use crate::error::{Error, Result};
use crate::kinematics::{build_sigma, Dimension, KinematicConfig};
use crate::matrixops::SymMatrix;
use crate::npoint::{self, MAX_LEGS};
use crate::quadrature::{integrate_contour, ContourSymmetry, QuadratureSettings};
use crate::scalar::C64;
use crate::special::{gamma, pochhammer};
use crate::value::{Estimate, IntegralValue, Method};
use serde::{Deserialize, Serialize};

/// Copy mass splittings used by the duplicate-leg route before extrapolating
/// to zero. The regularized value is analytic in delta, while below ~1e-5
/// the nested orthant quadratures lose digits to the near-unit correlations;
/// these three points keep both the truncation and the rounding error small.
pub const DUPLICATE_DELTAS: [f64; 3] = [1e-2, 1e-3, 1e-4];

fn sign_pow(k: i64) -> f64 {
    if k.rem_euclid(2) == 0 {
        1.0
    } else {
        -1.0
    }
}

fn require_natural(config: &KinematicConfig) -> Result<()> {
    let nu = config.nu_total() as f64;
    if config.n() != nu {
        return Err(Error::InvalidConfig(format!(
            "power raising works at n = nu = {nu}, got n = {}",
            config.n()
        )));
    }
    Ok(())
}

/// J^N(N - 1 + nu_k; powers 1 except nu_k at leg k) from the contour over
/// Sigma_kk -> Sigma_kk - s:
/// (-1)^{1-nu_k} / Gamma(nu_k) (1 / 2 pi i) int Gamma((nu_k+1)/2) / s^{(nu_k+1)/2} J^N(N; 1; Sigma^k(s)) ds.
pub fn raise_power_single(
    config: &KinematicConfig,
    k: usize,
    settings: &QuadratureSettings,
) -> Result<IntegralValue> {
    config.validate()?;
    require_natural(config)?;
    if k >= config.n_legs() {
        return Err(Error::IndexOutOfRange {
            index: k,
            dim: config.n_legs(),
        });
    }
    if config.powers.iter().enumerate().any(|(i, &p)| i != k && p != 1) {
        return Err(Error::InvalidConfig(
            "single-leg raising needs unit powers on the other legs".into(),
        ));
    }
    let sigma = build_sigma(config)?;
    sigma.require_positive_definite()?;
    let e = single_sigma(&sigma.entries, k, config.powers[k], settings)?;
    Ok(IntegralValue::from_estimate(e, Method::Contour))
}

pub(crate) fn single_sigma(
    sigma: &SymMatrix<f64>,
    k: usize,
    nu_k: u32,
    settings: &QuadratureSettings,
) -> Result<Estimate<f64>> {
    let r = sigma.inverse()?;
    let rkk = r.get(k, k);
    let c = contour_abscissa(1.0 / rkk, settings)?;
    let sqrt_det = sigma.determinant().sqrt();
    let alpha = (nu_k as f64 + 1.0) / 2.0;
    let ga = gamma(alpha);
    let base = sigma.to_c64();
    let inner = settings.inner(0.1);
    let slot = ErrorSlot::new();
    let quad = integrate_contour(
        |s: C64| {
            let mut m = base.clone();
            m.set(k, k, m.get(k, k) - s);
            let sd = (C64::new(1.0, 0.0) - s * rkk).sqrt() * sqrt_det;
            let j = slot.unwrap_or_nan(npoint::orthant_j(&m, Some(sd), &inner).map(|e| e.value));
            j * ga / s.powf(alpha)
        },
        c,
        ContourSymmetry::Conjugate,
        settings,
    );
    slot.check()?;
    let quad = quad?;
    let pref = sign_pow(1 - nu_k as i64) / gamma(nu_k as f64);
    Ok(Estimate {
        value: pref * quad.value.re,
        abs_error: pref.abs() * quad.abs_error,
        converged: quad.converged,
    })
}

/// J^N(N - 2 + 2 nu_p; powers 1 except nu_p at legs k and l) from the
/// contour over k^2_{kl} -> k^2_{kl} + 4 s:
/// 1 / (4^{nu_p - 1} Gamma(nu_p)^2) (1 / 2 pi i) int Gamma(nu_p) / s^{nu_p} J^N(N; 1; Sigma^{kl}(s)) ds.
pub fn raise_power_pair(
    config: &KinematicConfig,
    k: usize,
    l: usize,
    settings: &QuadratureSettings,
) -> Result<IntegralValue> {
    config.validate()?;
    require_natural(config)?;
    let legs = config.n_legs();
    for &i in &[k, l] {
        if i >= legs {
            return Err(Error::IndexOutOfRange { index: i, dim: legs });
        }
    }
    if k == l {
        return Err(Error::InvalidConfig("pair raising needs two distinct legs".into()));
    }
    if config.powers[k] != config.powers[l] {
        return Err(Error::InvalidConfig("pair raising needs equal powers on both legs".into()));
    }
    if config.powers.iter().enumerate().any(|(i, &p)| i != k && i != l && p != 1) {
        return Err(Error::InvalidConfig(
            "pair raising needs unit powers on the other legs".into(),
        ));
    }
    let sigma = build_sigma(config)?;
    sigma.require_positive_definite()?;
    let e = pair_sigma(&sigma.entries, k, l, config.powers[k], settings)?;
    Ok(IntegralValue::from_estimate(e, Method::Contour))
}

pub(crate) fn pair_sigma(
    sigma: &SymMatrix<f64>,
    k: usize,
    l: usize,
    nu_p: u32,
    settings: &QuadratureSettings,
) -> Result<Estimate<f64>> {
    let r = sigma.inverse()?;
    let rkl = r.get(k, l);
    let g = (r.get(k, k) * r.get(l, l)).sqrt();
    // det(Sigma - 2 s E) = det Sigma (1 - 2 s (R_kl + g)) (1 - 2 s (R_kl - g))
    let c = contour_abscissa(1.0 / (2.0 * (rkl + g)), settings)?;
    let sqrt_det = sigma.determinant().sqrt();
    let nu = nu_p as f64;
    let gn = gamma(nu);
    let base = sigma.to_c64();
    let inner = settings.inner(0.1);
    let one = C64::new(1.0, 0.0);
    let slot = ErrorSlot::new();
    let quad = integrate_contour(
        |s: C64| {
            let mut m = base.clone();
            m.set(k, l, m.get(k, l) - s * 2.0);
            let sd = (one - s * 2.0 * (rkl + g)).sqrt() * (one - s * 2.0 * (rkl - g)).sqrt() * sqrt_det;
            let j = slot.unwrap_or_nan(npoint::orthant_j(&m, Some(sd), &inner).map(|e| e.value));
            j * gn / s.powf(nu)
        },
        c,
        ContourSymmetry::Conjugate,
        settings,
    );
    slot.check()?;
    let quad = quad?;
    let pref = 1.0 / (4f64.powf(nu - 1.0) * gn * gn);
    Ok(Estimate {
        value: pref * quad.value.re,
        abs_error: pref * quad.abs_error,
        converged: quad.converged,
    })
}

/// Sigma with leg i repeated powers[i] times. The diagonal of every copy of
/// a repeated leg is scaled by 1 + delta (a small mass splitting), which keeps
/// the augmented matrix positive definite, also after adding u^2 11^T.
pub fn augmented_sigma(sigma: &SymMatrix<f64>, powers: &[u32], delta: f64) -> SymMatrix<f64> {
    let legs: Vec<usize> = powers
        .iter()
        .enumerate()
        .flat_map(|(i, &m)| std::iter::repeat(i).take(m as usize))
        .collect();
    SymMatrix::from_fn(legs.len(), |a, b| {
        let v = sigma.get(legs[a], legs[b]);
        if a == b && powers[legs[a]] > 1 {
            v * (1.0 + delta)
        } else {
            v
        }
    })
}

/// J^N(nu; powers) as the unit-power J^{nu}(nu) of the augmented matrix.
///
/// The exact augmentation is singular, so it is evaluated at the copy
/// splittings [`DUPLICATE_DELTAS`] and extrapolated quadratically to zero.
pub fn raise_power_duplicate(config: &KinematicConfig, settings: &QuadratureSettings) -> Result<IntegralValue> {
    config.validate()?;
    require_natural(config)?;
    let sigma = build_sigma(config)?;
    sigma.require_positive_definite()?;
    let e = duplicate_sigma(&sigma.entries, &config.powers, settings)?;
    Ok(IntegralValue::from_estimate(e, Method::Quadrature))
}

pub(crate) fn duplicate_sigma(
    sigma: &SymMatrix<f64>,
    powers: &[u32],
    settings: &QuadratureSettings,
) -> Result<Estimate<f64>> {
    let n_aug: u32 = powers.iter().sum();
    if n_aug as usize > MAX_LEGS {
        return Err(Error::AssemblyLimit(n_aug as usize));
    }
    if powers.iter().all(|&p| p == 1) {
        return npoint::orthant_j(sigma, None, settings);
    }
    let inner = settings.inner(1e-2);
    let vals: Vec<Estimate<f64>> = DUPLICATE_DELTAS
        .iter()
        .map(|&d| npoint::orthant_j(&augmented_sigma(sigma, powers, d), None, &inner))
        .collect::<Result<_>>()?;
    let x = DUPLICATE_DELTAS;
    // Lagrange weights at delta = 0.
    let w: Vec<f64> = (0..3)
        .map(|i| {
            (0..3)
                .filter(|&j| j != i)
                .map(|j| x[j] / (x[j] - x[i]))
                .product()
        })
        .collect();
    let value: f64 = (0..3).map(|i| w[i] * vals[i].value).sum();
    let lin = (x[1] * vals[2].value - x[2] * vals[1].value) / (x[1] - x[2]);
    let quad_err: f64 = (0..3).map(|i| w[i].abs() * vals[i].abs_error).sum();
    Ok(Estimate {
        value,
        abs_error: (value - lin).abs() + quad_err,
        converged: vals.iter().all(|v| v.converged),
    })
}

/// One term of the power-excess expansion.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PowerTerm {
    pub coefficient: f64,
    pub config: KinematicConfig,
}

/// J^N(nu - k; nu; Sigma) = (-1)^k sum_{|k_i| = k} k! prod (nu_i)_{k_i} / prod k_i!
///                          * J^N(nu + k; nu + k_vec; Sigma).
pub fn expand_power_excess(config: &KinematicConfig) -> Result<Vec<PowerTerm>> {
    config.validate()?;
    let nu = config.nu_total() as f64;
    let kf = nu - config.n();
    if kf < 1.0 || kf.fract() != 0.0 {
        return Err(Error::InvalidConfig(format!(
            "power excess nu - n must be a positive integer, got {kf}"
        )));
    }
    let k = kf as u32;
    let legs = config.n_legs();
    let fact = |m: u32| (1..=m).map(f64::from).product::<f64>();
    let mut out = Vec::new();
    let mut parts = vec![0u32; legs];
    compositions(k, 0, &mut parts, &mut |ks: &[u32]| {
        let num: f64 = ks
            .iter()
            .zip(&config.powers)
            .map(|(&ki, &p)| pochhammer(p as f64, ki) / fact(ki))
            .product();
        let coefficient = sign_pow(k as i64) * fact(k) * num;
        let powers: Vec<u32> = config.powers.iter().zip(ks).map(|(&p, &ki)| p + ki).collect();
        let c = KinematicConfig {
            powers,
            dimension: Dimension::Fixed(nu + kf),
            ..config.clone()
        };
        out.push(PowerTerm {
            coefficient,
            config: c,
        });
    });
    Ok(out)
}

fn compositions(left: u32, i: usize, parts: &mut Vec<u32>, f: &mut impl FnMut(&[u32])) {
    if i + 1 == parts.len() {
        parts[i] = left;
        f(parts);
        return;
    }
    for v in (0..=left).rev() {
        parts[i] = v;
        compositions(left - v, i + 1, parts, f);
    }
}
