//! Dimension shifts, propagator-power raising, eps-expansion and the
//! parameter-integral recurrences.
//!
//! Every route reduces to the orthant assembly J^N(N; 1; Sigma') of
//! [`crate::npoint`] on a modified matrix Sigma':
//!
//! * n > nu: real integral over Sigma + tau 11^T ([`raise_dimension`]);
//! * n < nu: Bromwich contour over Sigma - s 11^T ([`lower_dimension`]);
//! * raised powers: contours over Sigma - s e_k e_k^T or Sigma - 2 s (e_k e_k'^T + e_k' e_k^T),
//!   or duplicated legs ([`raise_power_single`], [`raise_power_pair`],
//!   [`raise_power_duplicate`]).

mod eps;
mod power;
mod recurrence;
mod shift;

pub use eps::{eps_expand, eps_expand_via, richardson_probe, EpsSeries, RichardsonProbe, DEFAULT_ORDER, PROBE_EPS};
pub use power::{
    augmented_sigma, expand_power_excess, raise_power_duplicate, raise_power_pair, raise_power_single,
    PowerTerm, DUPLICATE_DELTAS,
};
pub use recurrence::{recurrence_check_lower, recurrence_check_merge, RecurrenceCheck};
pub use shift::{lower_dimension, raise_dimension};


use crate::error::{Error, Result};
use crate::kinematics::{build_sigma, KinematicConfig};
use crate::matrixops::SymMatrix;
use crate::npoint;
use crate::quadrature::QuadratureSettings;
use crate::scalar::{Scalar, C64};
use crate::value::{Estimate, IntegralValue, Method};
use serde::{Deserialize, Serialize};

/// The matrix modifications used by the routes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ShiftKind {
    /// m_i^2 -> m_i^2 + tau for all legs: Sigma + tau 11^T.
    AllMassesPlusTau,
    /// m_i^2 -> m_i^2 - s for all legs: Sigma - s 11^T.
    AllMassesMinusS,
    /// Sigma_kk -> Sigma_kk - s.
    SingleDiagonalMinusS { k: usize },
    /// k^2_{kk'} -> k^2_{kk'} + 4 s, i.e. Sigma_kk' -> Sigma_kk' - 2 s.
    OffdiagonalInvariantPlus4S { k: usize, l: usize },
    /// Leg i repeated `multiplicity[i]` times; copies correlated with
    /// c = 1 - parameter.
    ColumnAugmented { multiplicity: Vec<u32> },
}

/// A base Sigma with a named modification and its (possibly complex) parameter.
#[derive(Clone, Debug, PartialEq)]
pub struct ShiftedSigma {
    pub base: SymMatrix<f64>,
    pub shift_kind: ShiftKind,
    pub parameter: C64,
}

impl ShiftedSigma {
    pub fn new(base: SymMatrix<f64>, shift_kind: ShiftKind, parameter: C64) -> Result<Self> {
        let n = base.dim();
        let check = |i: usize| {
            if i >= n {
                Err(Error::IndexOutOfRange { index: i, dim: n })
            } else {
                Ok(())
            }
        };
        match &shift_kind {
            ShiftKind::SingleDiagonalMinusS { k } => check(*k)?,
            ShiftKind::OffdiagonalInvariantPlus4S { k, l } => {
                check(*k)?;
                check(*l)?;
                if k == l {
                    return Err(Error::InvalidConfig("pair shift needs two distinct legs".into()));
                }
            }
            ShiftKind::ColumnAugmented { multiplicity } => {
                if multiplicity.len() != n || multiplicity.iter().any(|&m| m == 0) {
                    return Err(Error::InvalidConfig(
                        "one positive multiplicity per leg required".into(),
                    ));
                }
            }
            _ => {}
        }
        Ok(ShiftedSigma {
            base,
            shift_kind,
            parameter,
        })
    }

    /// The concrete matrix.
    pub fn materialize(&self) -> SymMatrix<C64> {
        let b = self.base.to_c64();
        let p = self.parameter;
        let n = b.dim();
        match &self.shift_kind {
            ShiftKind::AllMassesPlusTau => b.add_rank_one(&vec![1.0; n], p),
            ShiftKind::AllMassesMinusS => b.add_rank_one(&vec![1.0; n], -p),
            ShiftKind::SingleDiagonalMinusS { k } => {
                let mut m = b;
                m.set(*k, *k, m.get(*k, *k) - p);
                m
            }
            ShiftKind::OffdiagonalInvariantPlus4S { k, l } => {
                let mut m = b;
                m.set(*k, *l, m.get(*k, *l) - p * 2.0);
                m
            }
            ShiftKind::ColumnAugmented { multiplicity } => {
                let legs: Vec<usize> = multiplicity
                    .iter()
                    .enumerate()
                    .flat_map(|(i, &m)| std::iter::repeat(i).take(m as usize))
                    .collect();
                SymMatrix::from_fn(legs.len(), |a, c| {
                    let v = b.get(legs[a], legs[c]);
                    if a != c && legs[a] == legs[c] {
                        v * (C64::new(1.0, 0.0) - p)
                    } else {
                        v
                    }
                })
            }
        }
    }
}

/// Bromwich abscissa: the user's choice if it lies left of the first
/// singularity `s_crit`, otherwise half-way to it.
pub(crate) fn contour_abscissa(s_crit: f64, settings: &QuadratureSettings) -> Result<f64> {
    if !(s_crit > 0.0) || !s_crit.is_finite() {
        return Err(Error::DegenerateConditioning(format!(
            "no admissible contour abscissa (first singularity at {s_crit})"
        )));
    }
    match settings.contour_abscissa_c {
        Some(c) if c >= s_crit => Err(Error::InvalidConfig(format!(
            "contour abscissa {c} must lie left of the singularity at {s_crit}"
        ))),
        Some(c) => Ok(c),
        None => Ok(0.5 * s_crit),
    }
}

/// Records the first error raised inside an integrand that can only return
/// numbers; the integrand reports NaN in that case.
pub(crate) struct ErrorSlot(std::cell::RefCell<Option<Error>>);

impl ErrorSlot {
    pub(crate) fn new() -> Self {
        ErrorSlot(std::cell::RefCell::new(None))
    }

    pub(crate) fn unwrap_or_nan<T: Scalar>(&self, r: Result<T>) -> T {
        match r {
            Ok(v) => v,
            Err(e) => {
                self.0.borrow_mut().get_or_insert(e);
                T::from_f64(f64::NAN)
            }
        }
    }

    pub(crate) fn check(self) -> Result<()> {
        match self.0.into_inner() {
            Some(e) => Err(e),
            None => Ok(()),
        }
    }
}

/// Which route evaluates J^N(nu; powers; Sigma) at its natural dimension n = nu.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum NaturalRoute {
    Orthant,
    Single(usize),
    Pair(usize, usize),
    Duplicate,
}

pub(crate) fn natural_route(powers: &[u32]) -> NaturalRoute {
    let raised: Vec<usize> = (0..powers.len()).filter(|&i| powers[i] > 1).collect();
    match raised.as_slice() {
        [] => NaturalRoute::Orthant,
        [k] => NaturalRoute::Single(*k),
        [k, l] if powers[*k] == powers[*l] => NaturalRoute::Pair(*k, *l),
        _ => NaturalRoute::Duplicate,
    }
}

/// How raised propagator powers are evaluated at the natural dimension.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PowerRoute {
    /// Single-leg or pair contour when the raised powers allow it,
    /// duplicated legs otherwise.
    #[default]
    Contour,
    /// Always duplicate legs.
    Duplicate,
}

/// J^N(nu; powers; Sigma) at n = nu = sum of powers, for real Sigma.
pub(crate) fn natural_value(
    sigma: &SymMatrix<f64>,
    powers: &[u32],
    settings: &QuadratureSettings,
) -> Result<Estimate<f64>> {
    natural_value_via(sigma, powers, PowerRoute::Contour, settings)
}

pub(crate) fn natural_value_via(
    sigma: &SymMatrix<f64>,
    powers: &[u32],
    route: PowerRoute,
    settings: &QuadratureSettings,
) -> Result<Estimate<f64>> {
    match (natural_route(powers), route) {
        (NaturalRoute::Orthant, _) => npoint::orthant_j(sigma, None, settings),
        (_, PowerRoute::Duplicate) | (NaturalRoute::Duplicate, _) => {
            power::duplicate_sigma(sigma, powers, settings)
        }
        (NaturalRoute::Single(k), _) => power::single_sigma(sigma, k, powers[k], settings),
        (NaturalRoute::Pair(k, l), _) => power::pair_sigma(sigma, k, l, powers[k], settings),
    }
}

/// Inner settings for integrands built from J(nu; Sigma + u^2 11^T), given
/// j0 = J(nu; Sigma). |J| falls monotonically in u, so an absolute tolerance
/// tied to |j0| keeps the inner evaluations from chasing relative accuracy
/// on negligible tail values.
pub(crate) fn tail_settings(j0: f64, settings: &QuadratureSettings) -> QuadratureSettings {
    let mut inner = settings.inner(0.1);
    inner.abs_tol = inner.abs_tol.max(1e-2 * inner.rel_tol * j0.abs());
    inner
}

fn natural_method(powers: &[u32], route: PowerRoute) -> Method {
    match natural_route(powers) {
        NaturalRoute::Single(_) | NaturalRoute::Pair(..) if route == PowerRoute::Duplicate => Method::Quadrature,
        NaturalRoute::Orthant if powers.len() <= 3 => Method::ClosedForm,
        NaturalRoute::Orthant | NaturalRoute::Duplicate => Method::Quadrature,
        _ => Method::Contour,
    }
}

/// Evaluates any supported configuration, choosing the route:
/// explicit assemblies for unit powers with n in {N, N-1}; the power routes
/// at n = nu; the tau integral above and the contour below the natural
/// dimension; the power-excess expansion for non-unit powers at n = nu - k.
pub fn evaluate(config: &KinematicConfig, settings: &QuadratureSettings) -> Result<IntegralValue> {
    config.validate()?;
    settings.validate()?;
    let legs = config.n_legs();
    let nu = config.nu_total() as f64;
    let n = config.n();
    if config.unit_powers() && (n == legs as f64 || (n == legs as f64 - 1.0 && legs >= 2)) {
        return npoint::evaluate(config, settings);
    }
    if n >= 2.0 * nu {
        return Err(Error::DivergentIntegral(format!(
            "2 nu - n = {} <= 0 (ultraviolet pole)",
            2.0 * nu - n
        )));
    }
    if n == nu {
        let sigma = build_sigma(config)?;
        sigma.require_positive_definite()?;
        let e = natural_value(&sigma.entries, &config.powers, settings)?;
        return Ok(IntegralValue::from_estimate(e, natural_method(&config.powers, PowerRoute::Contour)));
    }
    if n > nu {
        return raise_dimension(config, settings);
    }
    if config.unit_powers() {
        return lower_dimension(config, settings);
    }
    let k = nu - n;
    if k.fract() == 0.0 {
        let mut total = IntegralValue::real(0.0, 0.0, Method::ClosedForm);
        for term in expand_power_excess(config)? {
            let v = evaluate(&term.config, settings)?;
            total = total.add(v.scale(C64::new(term.coefficient, 0.0)));
        }
        return Ok(total);
    }
    Err(Error::Unsupported(format!(
        "non-unit powers below the natural dimension by a non-integer amount ({k})"
    )))
}
