use super::{contour_abscissa, natural_method, natural_value, tail_settings, ErrorSlot};
use crate::error::{Error, Result};
use crate::kinematics::{build_sigma, KinematicConfig};
use crate::matrixops::SymMatrix;
use crate::npoint;
use crate::quadrature::{integrate_0inf, integrate_contour, ContourSymmetry, QuadratureSettings};
use crate::scalar::C64;
use crate::special::gamma;
use crate::value::{Estimate, IntegralValue, Method};

/// J^N(n) for n > nu from the natural dimension:
/// J(n) = 1/Gamma(p) int_0^inf tau^{p-1} J(nu; Sigma + tau 11^T) dtau, p = (n - nu)/2.
///
/// Requires n < 2 nu for convergence at large tau.
pub fn raise_dimension(config: &KinematicConfig, settings: &QuadratureSettings) -> Result<IntegralValue> {
    config.validate()?;
    let sigma = build_sigma(config)?;
    sigma.require_positive_definite()?;
    let e = raise_dimension_sigma(&sigma.entries, &config.powers, config.n(), settings)?;
    let method = match natural_method(&config.powers, super::PowerRoute::Contour) {
        Method::Contour => Method::Contour,
        _ => Method::Quadrature,
    };
    Ok(IntegralValue::from_estimate(e, method))
}

pub(crate) fn raise_dimension_sigma(
    sigma: &SymMatrix<f64>,
    powers: &[u32],
    n: f64,
    settings: &QuadratureSettings,
) -> Result<Estimate<f64>> {
    let nu = powers.iter().sum::<u32>() as f64;
    let p = (n - nu) / 2.0;
    if p <= 0.0 {
        return Err(Error::InvalidConfig(format!(
            "raise_dimension needs n > nu, got n = {n}, nu = {nu}"
        )));
    }
    if n >= 2.0 * nu {
        return Err(Error::DivergentIntegral(format!(
            "2 nu - n = {} <= 0",
            2.0 * nu - n
        )));
    }
    let legs = sigma.dim();
    let ones = vec![1.0; legs];
    let j0 = natural_value(sigma, powers, &settings.inner(0.1))?.value;
    let inner = tail_settings(j0, settings);
    let slot = ErrorSlot::new();
    // tau = u^2 removes the tau^{p-1} endpoint singularity for p = 1/2.
    let q = integrate_0inf(
        |u: f64| {
            if u == 0.0 && 2.0 * p - 1.0 < 0.0 {
                return 0.0;
            }
            let shifted = sigma.add_rank_one(&ones, u * u);
            let j = slot.unwrap_or_nan(natural_value(&shifted, powers, &inner).map(|e| e.value));
            2.0 * u.powf(2.0 * p - 1.0) * j
        },
        settings,
    );
    slot.check()?;
    let g = gamma(p);
    Ok(Estimate {
        value: q.value / g,
        abs_error: q.abs_error / g,
        converged: q.converged,
    })
}

/// J^N(n) for n < N with unit powers, by the inverse Laplace transform
/// J(n) = (1 / 2 pi i) int Gamma(q + 1) / s^{q+1} J(N; Sigma - s 11^T) ds,  q = (N - n)/2.
///
/// The contour sits at Re s = c left of s_crit = 1 / (1^T R 1), where
/// det(Sigma - s 11^T) = det Sigma (1 - s 1^T R 1) first vanishes.
pub fn lower_dimension(config: &KinematicConfig, settings: &QuadratureSettings) -> Result<IntegralValue> {
    config.validate()?;
    if !config.unit_powers() {
        return Err(Error::Unsupported(
            "the contour dimension shift is implemented for unit powers".into(),
        ));
    }
    let sigma = build_sigma(config)?;
    sigma.require_positive_definite()?;
    let e = lower_dimension_sigma(&sigma.entries, config.n(), settings)?;
    Ok(IntegralValue::from_estimate(e, Method::Contour))
}

pub(crate) fn lower_dimension_sigma(
    sigma: &SymMatrix<f64>,
    n: f64,
    settings: &QuadratureSettings,
) -> Result<Estimate<f64>> {
    let legs = sigma.dim();
    let q = (legs as f64 - n) / 2.0;
    if q <= 0.0 {
        return Err(Error::InvalidConfig(format!(
            "lower_dimension needs n < N, got n = {n}, N = {legs}"
        )));
    }
    let r = sigma.inverse()?;
    let w = r.total_sum();
    let c = contour_abscissa(1.0 / w, settings)?;
    let sqrt_det = sigma.determinant().sqrt();
    let ones = vec![1.0; legs];
    let base = sigma.to_c64();
    let inner = settings.inner(0.1);
    let gq = gamma(q + 1.0);
    let slot = ErrorSlot::new();
    let quad = integrate_contour(
        |s: C64| {
            let shifted = base.add_rank_one(&ones, -s);
            let sd = (C64::new(1.0, 0.0) - s * w).sqrt() * sqrt_det;
            let j = slot.unwrap_or_nan(npoint::orthant_j(&shifted, Some(sd), &inner).map(|e| e.value));
            j * gq / s.powf(q + 1.0)
        },
        c,
        ContourSymmetry::Conjugate,
        settings,
    );
    slot.check()?;
    let quad = quad?;
    Ok(Estimate {
        value: quad.value.re,
        abs_error: quad.abs_error,
        converged: quad.converged,
    })
}
