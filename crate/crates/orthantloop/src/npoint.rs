//! Integer-dimension N-point functions with unit propagator powers.
//!
//! Two master formulas cover everything here. With R = Sigma^-1 and rho its
//! unit-diagonal normalization,
//!
//! J^N(N)   = (-1)^N 2 pi^{N/2} / sqrt(det Sigma) * P_N(rho),
//! J^N(N-1) = (-1)^N 2^{1/2 - N/2} (2 pi)^{N/2} / sqrt(det Sigma)
//!            * sum_j rowsum_j(R) / sqrt(2 pi R_jj) * P_{N-1}(rho^{(j)}),
//!
//! where P_N is the Gaussian orthant probability (see [`crate::gaussint`]) and
//! rho^{(j)} is the normalized Schur complement of R with leg j eliminated.
//! The overall constants are fixed against the Feynman-parameter definition.

use crate::error::{Error, Result};
use crate::gaussint::{self, GaussScalar};
use crate::kinematics::{angle, build_sigma, kallen, KinematicConfig, SigmaMatrix};
use crate::matrixops::{CorrelationData, SymMatrix};
use crate::quadrature::QuadratureSettings;
use crate::scalar::C64;
use crate::value::{Estimate, IntegralValue, Method};
use std::f64::consts::PI;

/// Largest N for which the orthant assembly is available.
pub const MAX_LEGS: usize = 7;

/// J^N(N; 1; Sigma) for real or complex Sigma. `sqrt_det` fixes the branch of
/// sqrt(det Sigma); `None` takes the principal root.
pub fn orthant_j<T: GaussScalar>(
    sigma: &SymMatrix<T>,
    sqrt_det: Option<T>,
    settings: &QuadratureSettings,
) -> Result<Estimate<T>> {
    let n = sigma.dim();
    if n == 0 || n > MAX_LEGS {
        return Err(Error::Unsupported(format!("orthant assembly for N = {n}")));
    }
    let r = sigma.inverse()?;
    let sd = sqrt_det.unwrap_or_else(|| sigma.determinant().sqrt());
    let p = gaussint::orthant_probability(&r.normalized(), settings)?;
    let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
    let pref = T::from_f64(sign * 2.0 * PI.powf(n as f64 / 2.0)) / sd;
    Ok(p.scale(pref))
}

/// J^N(N - 1; 1; Sigma), N >= 2.
pub fn orthant_j_lower<T: GaussScalar>(
    sigma: &SymMatrix<T>,
    sqrt_det: Option<T>,
    settings: &QuadratureSettings,
) -> Result<Estimate<T>> {
    let n = sigma.dim();
    if !(2..=MAX_LEGS).contains(&n) {
        return Err(Error::Unsupported(format!("n = N - 1 assembly for N = {n}")));
    }
    let r = sigma.inverse()?;
    let sd = sqrt_det.unwrap_or_else(|| sigma.determinant().sqrt());
    let mut total = Estimate::exact(T::zero());
    for j in 0..n {
        let rjj = r.get(j, j);
        let weight = r.row_sum(j) / (rjj * (2.0 * PI)).sqrt();
        let cond = r.schur_complement(&[j])?.normalized();
        let p = gaussint::orthant_probability(&cond, settings)?;
        total = total.add(p.scale(weight));
    }
    let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
    let nf = n as f64;
    let pref = T::from_f64(sign * 2f64.powf(0.5 - nf / 2.0) * (2.0 * PI).powf(nf / 2.0)) / sd;
    Ok(total.scale(pref))
}

fn expect_shape(config: &KinematicConfig, legs: usize, n: f64) -> Result<()> {
    if config.n_legs() != legs {
        return Err(Error::InvalidConfig(format!(
            "expected {legs} legs, got {}",
            config.n_legs()
        )));
    }
    if !config.unit_powers() {
        return Err(Error::InvalidConfig("expected unit propagator powers".into()));
    }
    if config.n() != n {
        return Err(Error::InvalidConfig(format!(
            "expected dimension {n}, got {}",
            config.n()
        )));
    }
    Ok(())
}

fn positive_definite_sigma(config: &KinematicConfig) -> Result<SigmaMatrix> {
    let sigma = build_sigma(config)?;
    // Singular (boundary) kinematics are reported as such before the PD test.
    CorrelationData::from_matrix(&sigma.entries)?;
    sigma.require_positive_definite()?;
    Ok(sigma)
}

fn method_for(legs: usize) -> Method {
    if legs <= 3 {
        Method::ClosedForm
    } else {
        Method::Quadrature
    }
}

/// J^2(2) = tau_12 / (m_1 m_2 sin tau_12), continued through the angle
/// branches; c = 1 gives the limit 1/(m_1 m_2).
pub fn j2_2d(config: &KinematicConfig) -> Result<IntegralValue> {
    config.validate()?;
    expect_shape(config, 2, 2.0)?;
    let (m1, m2) = (config.masses[0], config.masses[1]);
    let c = config.cosine(0, 1);
    let a = angle(c, kallen(m1 * m1, m2 * m2, config.invariants[0][1]));
    let tau = a.tau;
    let ratio = if tau.norm() < 1e-6 {
        // tau / sin tau = 1 + tau^2 / 6 + 7 tau^4 / 360
        let t2 = tau * tau;
        C64::new(1.0, 0.0) + t2 / 6.0 + t2 * t2 * (7.0 / 360.0)
    } else {
        let s = tau.sin();
        if s.norm() < 1e-300 {
            return Err(Error::DivergentIntegral(
                "two-point function at threshold (c = -1)".into(),
            ));
        }
        tau / s
    };
    Ok(IntegralValue::new(ratio / (m1 * m2), 0.0, Method::ClosedForm))
}

/// J^3(3) = -(sqrt(pi) / 2) Omega / sqrt(det Sigma), with
/// Omega = Psi_12 + Psi_13 + Psi_23 - pi and Psi_ij the arccosine of the
/// partial correlation of (i, j) given the third leg.
pub fn j3_3d(config: &KinematicConfig) -> Result<IntegralValue> {
    config.validate()?;
    expect_shape(config, 3, 3.0)?;
    let sigma = positive_definite_sigma(config)?;
    let cd = CorrelationData::from_matrix(&sigma.entries)?;
    let omega: f64 = [(0, 1), (0, 2), (1, 2)]
        .iter()
        .map(|&(i, j)| (-cd.rho.get(i, j)).clamp(-1.0, 1.0).acos())
        .sum::<f64>()
        - PI;
    let v = -(PI.sqrt() / 2.0) * omega / cd.det_sigma.sqrt();
    Ok(IntegralValue::real(v, 4.0 * f64::EPSILON * v.abs(), Method::ClosedForm))
}

fn orthant_value(config: &KinematicConfig, legs: usize, settings: &QuadratureSettings) -> Result<IntegralValue> {
    config.validate()?;
    expect_shape(config, legs, legs as f64)?;
    let sigma = positive_definite_sigma(config)?;
    let e = orthant_j(&sigma.entries, None, settings)?;
    Ok(IntegralValue::from_estimate(e, method_for(legs)))
}

fn orthant_lower_value(
    config: &KinematicConfig,
    legs: usize,
    settings: &QuadratureSettings,
) -> Result<IntegralValue> {
    config.validate()?;
    expect_shape(config, legs, legs as f64 - 1.0)?;
    let sigma = positive_definite_sigma(config)?;
    let e = orthant_j_lower(&sigma.entries, None, settings)?;
    Ok(IntegralValue::from_estimate(e, method_for(legs - 1)))
}

/// J^3(2): row sums of R times single-leg weights times the conditioned
/// pair terms 1/8 + asin(partial correlation) / (4 pi).
pub fn j3_2d(config: &KinematicConfig) -> Result<IntegralValue> {
    orthant_lower_value(config, 3, &QuadratureSettings::default())
}

/// J^4(4) from one I_4 and six arcsines.
pub fn j4_4d(config: &KinematicConfig, settings: &QuadratureSettings) -> Result<IntegralValue> {
    orthant_value(config, 4, settings)
}

/// J^5(5) from five I_4 (one per deleted leg) and ten arcsines.
pub fn j5_5d(config: &KinematicConfig, settings: &QuadratureSettings) -> Result<IntegralValue> {
    orthant_value(config, 5, settings)
}

/// J^6(6): fifteen I_4, one I_6 entering with a minus sign.
pub fn j6_6d(config: &KinematicConfig, settings: &QuadratureSettings) -> Result<IntegralValue> {
    orthant_value(config, 6, settings)
}

/// J^7(7): thirty-five I_4 with weight +1/pi^4 and seven I_6 with -1/pi^6.
pub fn j7_7d(config: &KinematicConfig, settings: &QuadratureSettings) -> Result<IntegralValue> {
    orthant_value(config, 7, settings)
}

/// J^5(4): row-sum weighted single, conditioned-pair and I_4 blocks.
pub fn j5_4d(config: &KinematicConfig, settings: &QuadratureSettings) -> Result<IntegralValue> {
    orthant_lower_value(config, 5, settings)
}

/// Any unit-power configuration with n = N (N <= 7) or n = N - 1 (2 <= N <= 7).
/// Other dimensions and powers go through [`crate::dimshift`].
pub fn evaluate(config: &KinematicConfig, settings: &QuadratureSettings) -> Result<IntegralValue> {
    config.validate()?;
    let legs = config.n_legs();
    let n = config.n();
    if !config.unit_powers() {
        return Err(Error::Unsupported(
            "non-unit powers need the power-raising routes".into(),
        ));
    }
    if n == legs as f64 {
        match legs {
            1 => {
                let m = config.masses[0];
                Ok(IntegralValue::real(-PI.sqrt() / m, 0.0, Method::ClosedForm))
            }
            2 => j2_2d(config),
            3 => j3_3d(config),
            4..=MAX_LEGS => orthant_value(config, legs, settings),
            _ => Err(Error::Unsupported(format!("N = {legs} exceeds {MAX_LEGS}"))),
        }
    } else if n == legs as f64 - 1.0 && (2..=MAX_LEGS).contains(&legs) {
        orthant_lower_value(config, legs, settings)
    } else {
        Err(Error::Unsupported(format!(
            "no direct assembly for N = {legs}, n = {n}"
        )))
    }
}

/// Unit-power J^N(n) with n in {N, N - 1} straight from a real Sigma.
pub fn evaluate_sigma(sigma: &SymMatrix<f64>, n: f64, settings: &QuadratureSettings) -> Result<IntegralValue> {
    let legs = sigma.dim();
    let s = SigmaMatrix::from_entries(sigma.clone());
    CorrelationData::from_matrix(sigma)?;
    s.require_positive_definite()?;
    let e = if n == legs as f64 {
        orthant_j(sigma, None, settings)?
    } else if n == legs as f64 - 1.0 {
        orthant_j_lower(sigma, None, settings)?
    } else {
        return Err(Error::Unsupported(format!(
            "no direct assembly for N = {legs}, n = {n}"
        )));
    };
    let legs_eff = if n == legs as f64 { legs } else { legs - 1 };
    Ok(IntegralValue::from_estimate(e, method_for(legs_eff)))
}

/// Helper for callers that only need the complex value.
pub fn orthant_j_c64(sigma: &SymMatrix<C64>, sqrt_det: C64, settings: &QuadratureSettings) -> Result<Estimate<C64>> {
    orthant_j(sigma, Some(sqrt_det), settings)
}
