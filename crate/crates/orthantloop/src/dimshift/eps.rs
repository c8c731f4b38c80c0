use super::{evaluate, natural_method, natural_value_via, tail_settings, ErrorSlot, PowerRoute};
use crate::error::{Error, Result};
use crate::kinematics::{build_sigma, Dimension, KinematicConfig};
use crate::matrixops::SymMatrix;
use crate::quadrature::{integrate_line, QuadratureSettings};
use crate::scalar::C64;
use crate::special::inverse_gamma_series;
use crate::value::{IntegralValue, Method};
use serde::{Deserialize, Serialize};

// Initial trapezoidal step in x = ln u.
const LINE_STEP: f64 = 0.5;

/// Default expansion order.
pub const DEFAULT_ORDER: usize = 2;

/// J^N(d - 2 eps) = sum_K c_K eps^K + O(eps^{order+1}).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpsSeries {
    pub d_base: i32,
    /// k = (d - nu) / 2; half-integer for odd d - nu.
    pub k_shift: f64,
    pub coefficients: Vec<IntegralValue>,
    pub order: usize,
}

impl EpsSeries {
    /// Sum of the truncated series at `eps`.
    pub fn at(&self, eps: f64) -> C64 {
        self.coefficients
            .iter()
            .rev()
            .fold(C64::new(0.0, 0.0), |acc, c| acc * eps + c.value)
    }
}

/// Expands J^N(d - 2 eps) around the integer dimension d > nu.
///
/// With tau = u^2 and k = (d - nu)/2 the shift to the natural dimension reads
/// J(d - 2 eps) = 1/Gamma(k - eps) int_0^inf 2 u^{2k-1} u^{-2 eps} J(nu; Sigma + u^2 11^T) du;
/// expanding u^{-2 eps} gives the log moments
/// L_m = int_0^inf 2 u^{2k-1} (2 ln u)^m J du, and c_K = sum_{m+l=K} g_l (-1)^m / m! L_m
/// with g_l the Taylor coefficients of 1/Gamma(k - eps).
///
/// The dimension must be `Dimension::Expansion`; a fixed integer dimension
/// is expanded to [`DEFAULT_ORDER`].
pub fn eps_expand(config: &KinematicConfig, settings: &QuadratureSettings) -> Result<EpsSeries> {
    eps_expand_via(config, PowerRoute::Contour, settings)
}

/// [`eps_expand`] with an explicit route for raised powers.
pub fn eps_expand_via(
    config: &KinematicConfig,
    route: PowerRoute,
    settings: &QuadratureSettings,
) -> Result<EpsSeries> {
    config.validate()?;
    settings.validate()?;
    let (d, order) = match config.dimension {
        Dimension::Expansion { d, order } => (d, order),
        Dimension::Fixed(n) if n.fract() == 0.0 => (n as i32, DEFAULT_ORDER),
        Dimension::Fixed(n) => {
            return Err(Error::InvalidConfig(format!(
                "eps expansion needs an integer base dimension, got {n}"
            )))
        }
    };
    let nu = config.nu_total() as f64;
    let k = (d as f64 - nu) / 2.0;
    if k <= 0.0 {
        return Err(Error::Unsupported(format!(
            "eps expansion needs d > nu (k = {k})"
        )));
    }
    if d as f64 >= 2.0 * nu {
        return Err(Error::DivergentIntegral(format!(
            "2 nu - d = {} <= 0 (ultraviolet pole at eps = 0)",
            2.0 * nu - d as f64
        )));
    }
    let sigma = build_sigma(config)?;
    sigma.require_positive_definite()?;
    let sigma = sigma.entries;
    let powers = &config.powers;
    let legs = sigma.dim();
    let ones = vec![1.0; legs];
    let j0 = natural_value_via(&sigma, powers, route, &settings.inner(0.1))?.value;
    let inner = tail_settings(j0, settings);
    let slot = ErrorSlot::new();
    // With u = e^x the log moments become 2 u^{2k} (2x)^m J dx: analytic in
    // the strip |Im x| < pi/2 and exponentially decaying on both sides, which
    // suits the trapezoidal rule far better than mapping [0, inf).
    let q = integrate_line(
        |x: f64| {
            let u2 = (2.0 * x).exp();
            if u2 == 0.0 || !u2.is_finite() {
                return vec![0.0; order + 1];
            }
            let shifted = sigma.add_rank_one(&ones, u2);
            let j = slot.unwrap_or_nan(natural_value_via(&shifted, powers, route, &inner).map(|e| e.value));
            let base = 2.0 * u2.powf(k) * j;
            (0..=order).map(|m| base * (2.0 * x).powi(m as i32)).collect::<Vec<f64>>()
        },
        0.0,
        LINE_STEP,
        log_moment_range(&sigma, k, nu, order, settings.rel_tol),
        settings,
    );
    slot.check()?;
    let g = inverse_gamma_series(k, order)?;
    let method = match natural_method(powers, route) {
        Method::Contour => Method::Contour,
        _ => Method::Quadrature,
    };
    let mut fact = 1.0;
    let moments: Vec<(f64, f64)> = (0..=order)
        .map(|m| {
            if m > 0 {
                fact *= m as f64;
            }
            let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
            (sign * q.value[m] / fact, q.abs_error / fact)
        })
        .collect();
    let coefficients = (0..=order)
        .map(|kk| {
            let (mut v, mut e) = (0.0, 0.0);
            for m in 0..=kk {
                v += g[kk - m] * moments[m].0;
                e += g[kk - m].abs() * moments[m].1;
            }
            IntegralValue {
                value: C64::new(v, 0.0),
                abs_error: e,
                method,
                converged: q.converged,
            }
        })
        .collect();
    Ok(EpsSeries {
        d_base: d,
        k_shift: k,
        coefficients,
        order,
    })
}

/// Range of x = ln u outside which the log-moment integrands are negligible.
///
/// On the simplex u^T Sigma u <= M = max_i Sigma_ii, so
/// |J(Sigma + t 11^T)| <= |J(Sigma)| (1 + t / M)^{-nu/2}; the integrand is then
/// bounded by 2 |J(Sigma)| e^{2kx} (1 + e^{2x} / M)^{-nu/2} |2x|^m. Cutting
/// there also keeps the sweep away from large u, where J is pure round-off.
fn log_moment_range(sigma: &SymMatrix<f64>, k: f64, nu: f64, order: usize, rel_tol: f64) -> (f64, f64) {
    let m = sigma.diagonal().into_iter().fold(f64::MIN_POSITIVE, f64::max);
    let bound = |x: f64| {
        let poly = (2.0 * x.abs()).max(1.0).powi(order as i32);
        2.0 * (2.0 * k * x).exp() * (1.0 + (2.0 * x).exp() / m).powf(-nu / 2.0) * poly
    };
    let cut = 1e-3 * rel_tol;
    let step = 0.25;
    let mut lo = 0.0;
    while bound(lo) > cut && lo > -400.0 {
        lo -= step;
    }
    let mut hi = 0.0;
    while bound(hi) > cut && hi < 400.0 {
        hi += step;
    }
    (lo, hi)
}

/// Finite-eps check of an expansion from direct evaluations of J(d - 2 eps).
///
/// `c0` is the intercept of the line through the two finite-eps values.
/// The slope of that line is c1 + c2 (eps_0 + eps_1) + ..., which is biased
/// whenever |c2| is comparable to |c1|, so `c1` is instead the Richardson
/// extrapolation to eps = 0 of the difference quotients (J(eps) - J(0)) / eps;
/// its bias is O(eps_0 eps_1 c3). The plain slope is kept as `line_slope`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RichardsonProbe {
    pub eps: [f64; 2],
    pub values: [IntegralValue; 2],
    /// J at eps = 0.
    pub value_at_zero: IntegralValue,
    pub c0: f64,
    pub c1: f64,
    pub line_slope: f64,
}

pub const PROBE_EPS: [f64; 2] = [0.05, 0.025];

/// Evaluates J(d - 2 eps) at eps = 0, 0.025 and 0.05 through the dimension
/// shifts, independently of the log-moment integrals.
pub fn richardson_probe(config: &KinematicConfig, settings: &QuadratureSettings) -> Result<RichardsonProbe> {
    let d = config.dimension.n();
    let at = |e: f64| evaluate(&config.with_dimension(d - 2.0 * e), settings);
    let (e0, e1) = (PROBE_EPS[0], PROBE_EPS[1]);
    let (v0, v1, z) = (at(e0)?, at(e1)?, at(0.0)?);
    let line_slope = (v0.re() - v1.re()) / (e0 - e1);
    let c0 = v1.re() - line_slope * e1;
    let q0 = (v0.re() - z.re()) / e0;
    let q1 = (v1.re() - z.re()) / e1;
    let c1 = q1 - (q0 - q1) / (e0 - e1) * e1;
    Ok(RichardsonProbe {
        eps: PROBE_EPS,
        values: [v0, v1],
        value_at_zero: z,
        c0,
        c1,
        line_slope,
    })
}
