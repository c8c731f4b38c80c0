use super::{evaluate, natural_value, ErrorSlot};
use crate::error::{Error, Result};
use crate::kinematics::{build_sigma, Dimension, KinematicConfig, SigmaMatrix};
use crate::matrixops::SymMatrix;
use crate::npoint;
use crate::quadrature::{integrate_01, integrate_0inf, QuadratureSettings};
use crate::special::gamma;
use crate::value::{Estimate, IntegralValue, Method};
use serde::{Deserialize, Serialize};

/// Both sides of a recurrence and their relative residual.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RecurrenceCheck {
    pub residual: f64,
    pub lhs: IntegralValue,
    pub rhs: IntegralValue,
    /// Set when the right-hand side needed an indefinite matrix and was not
    /// evaluated; the residual is then NaN.
    pub skipped: bool,
}

impl RecurrenceCheck {
    fn new(lhs: IntegralValue, rhs: IntegralValue) -> Self {
        RecurrenceCheck {
            residual: lhs.rel_diff(&rhs),
            lhs,
            rhs,
            skipped: false,
        }
    }
}

/// J-bar / J = (-1)^nu 2^{nu - n/2 - 1} Gamma(nu) / Gamma(2 nu - n).
fn jbar_factor(nu: u32, n: f64) -> Result<f64> {
    let nuf = nu as f64;
    let arg = 2.0 * nuf - n;
    if arg <= 0.0 && arg.fract() == 0.0 {
        return Err(Error::DivergentIntegral(format!(
            "Gamma(2 nu - n) has a pole at 2 nu - n = {arg}"
        )));
    }
    let sign = if nu % 2 == 0 { 1.0 } else { -1.0 };
    Ok(sign * 2f64.powf(nuf - n / 2.0 - 1.0) * gamma(nuf) / gamma(arg))
}

fn beta(a: f64, b: f64) -> f64 {
    gamma(a) * gamma(b) / gamma(a + b)
}

/// J(n; powers; Sigma) for a real positive-definite Sigma by the cheapest route.
fn value_at(
    sigma: &SymMatrix<f64>,
    powers: &[u32],
    n: f64,
    settings: &QuadratureSettings,
) -> Result<Estimate<f64>> {
    let legs = sigma.dim();
    let nu: u32 = powers.iter().sum();
    let unit = powers.iter().all(|&p| p == 1);
    if unit && n == legs as f64 {
        npoint::orthant_j(sigma, None, settings)
    } else if unit && n == legs as f64 - 1.0 && legs >= 2 {
        npoint::orthant_j_lower(sigma, None, settings)
    } else if n == nu as f64 {
        natural_value(sigma, powers, settings)
    } else {
        let cfg = KinematicConfig::from_sigma(sigma, powers.to_vec(), Dimension::Fixed(n))?;
        let v = evaluate(&cfg, settings)?;
        Ok(Estimate {
            value: v.re(),
            abs_error: v.abs_error,
            converged: v.converged,
        })
    }
}

fn lhs_value(config: &KinematicConfig, settings: &QuadratureSettings) -> Result<IntegralValue> {
    evaluate(config, settings)
}

/// Eliminates the last leg:
/// Jbar^N(n) = 1/B(nu - nu_N, nu_N) int_0^inf t^{nu_N - 1} (1 + t)^{nu - n}
///             Jbar^{N-1}(n - 2 nu_N; Sigma^eta(t)) dt,
/// Sigma^eta_jl(t) = Sigma_jl + t (Sigma_jN + Sigma_lN) + t^2 Sigma_NN.
pub fn recurrence_check_lower(config: &KinematicConfig, settings: &QuadratureSettings) -> Result<RecurrenceCheck> {
    config.validate()?;
    let legs = config.n_legs();
    if legs < 2 {
        return Err(Error::InvalidConfig("the recurrence needs at least two legs".into()));
    }
    let sigma = build_sigma(config)?;
    sigma.require_positive_definite()?;
    let s = &sigma.entries;
    let n = config.n();
    let nu = config.nu_total();
    let nu_last = config.powers[legs - 1];
    let inner_powers = &config.powers[..legs - 1];
    let nu_inner = nu - nu_last;
    let n_inner = n - 2.0 * nu_last as f64;

    let lhs = lhs_value(config, settings)?;

    let outer_bar = jbar_factor(nu, n)?;
    let inner_bar = jbar_factor(nu_inner, n_inner)?;
    let b = beta(nu_inner as f64, nu_last as f64);
    let last = legs - 1;
    let inner = settings.inner(0.1);
    let slot = ErrorSlot::new();
    let q = integrate_0inf(
        |t: f64| {
            let eta = SymMatrix::from_fn(last, |j, l| {
                s.get(j, l) + t * (s.get(j, last) + s.get(l, last)) + t * t * s.get(last, last)
            });
            let j = slot.unwrap_or_nan(value_at(&eta, inner_powers, n_inner, &inner).map(|e| e.value));
            t.powf(nu_last as f64 - 1.0) * (1.0 + t).powf(nu as f64 - n) * j
        },
        settings,
    );
    slot.check()?;
    // Back to J normalization.
    let scale = inner_bar / (b * outer_bar);
    let rhs = IntegralValue::real(q.value * scale, q.abs_error * scale.abs(), Method::Quadrature);
    Ok(RecurrenceCheck::new(lhs, rhs))
}

/// Merges the last two legs into one with power nu_{N-1} + nu_N:
/// J^N(n) = int_0^1 u^{nu_1 - 1} (1 - u)^{nu_2 - 1} / B(nu_1, nu_2) J^{N-1}(n; Sigma-bar(u)) du,
/// Sigma-bar_MM = u^2 Sigma_{N-1,N-1} + 2 u (1-u) Sigma_{N-1,N} + (1-u)^2 Sigma_NN,
/// Sigma-bar_jM = u Sigma_{j,N-1} + (1-u) Sigma_jN.
///
/// Total power and dimension are unchanged, so the J-bar factors cancel.
pub fn recurrence_check_merge(config: &KinematicConfig, settings: &QuadratureSettings) -> Result<RecurrenceCheck> {
    config.validate()?;
    let legs = config.n_legs();
    if legs < 2 {
        return Err(Error::InvalidConfig("merging needs at least two legs".into()));
    }
    let sigma = build_sigma(config)?;
    sigma.require_positive_definite()?;
    let s = &sigma.entries;
    let n = config.n();
    let (a, b) = (legs - 2, legs - 1);
    let (nu1, nu2) = (config.powers[a], config.powers[b]);
    let mut powers = config.powers[..legs - 1].to_vec();
    powers[a] = nu1 + nu2;

    let lhs = lhs_value(config, settings)?;

    let merged = |u: f64| {
        SymMatrix::from_fn(legs - 1, |j, l| match (j == a, l == a) {
            (true, true) => {
                u * u * s.get(a, a) + 2.0 * u * (1.0 - u) * s.get(a, b) + (1.0 - u).powi(2) * s.get(b, b)
            }
            (true, false) => u * s.get(l, a) + (1.0 - u) * s.get(l, b),
            (false, true) => u * s.get(j, a) + (1.0 - u) * s.get(j, b),
            _ => s.get(j, l),
        })
    };
    // The merged matrix is a congruence of Sigma and stays definite for
    // Euclidean input; probe it anyway before integrating.
    let indefinite = (0..=16).any(|i| {
        let m = merged(i as f64 / 16.0);
        !SigmaMatrix::from_entries(m).is_positive_definite()
    });
    if indefinite {
        return Ok(RecurrenceCheck {
            residual: f64::NAN,
            rhs: IntegralValue::real(f64::NAN, f64::NAN, Method::Quadrature),
            lhs,
            skipped: true,
        });
    }
    let bb = beta(nu1 as f64, nu2 as f64);
    let inner = settings.inner(0.1);
    let slot = ErrorSlot::new();
    let q = integrate_01(
        |u: f64| {
            let j = slot.unwrap_or_nan(value_at(&merged(u), &powers, n, &inner).map(|e| e.value));
            u.powf(nu1 as f64 - 1.0) * (1.0 - u).powf(nu2 as f64 - 1.0) * j
        },
        settings,
    );
    slot.check()?;
    let method = if powers.iter().all(|&p| p == 1) {
        Method::Quadrature
    } else {
        Method::Contour
    };
    let rhs = IntegralValue::real(q.value / bb, q.abs_error / bb, method);
    Ok(RecurrenceCheck::new(lhs, rhs))
}
