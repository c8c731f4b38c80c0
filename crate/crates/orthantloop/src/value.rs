use crate::scalar::{Scalar, C64};
use serde::{Deserialize, Serialize};
use std::fmt;

/// Normalization of every returned J: loop measure d^n q / (i pi^{n/2}),
/// propagators 1/(q_i^2 - m_i^2)^{nu_i} in the Feynman-parameter form
/// `(-1)^{-nu} Gamma(nu - n/2) / prod Gamma(nu_i) * int_simplex prod u_i^{nu_i-1} (u^T Sigma u)^{n/2-nu}`.
pub const NORMALIZATION: &str = "loop-measure-J";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    ClosedForm,
    Quadrature,
    Contour,
    MonteCarlo,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::ClosedForm => "closed_form",
            Method::Quadrature => "quadrature",
            Method::Contour => "contour",
            Method::MonteCarlo => "monte_carlo",
        }
    }

    /// The weaker of two methods, used when combining results.
    fn combine(self, other: Method) -> Method {
        fn rank(m: Method) -> u8 {
            match m {
                Method::ClosedForm => 0,
                Method::Quadrature => 1,
                Method::Contour => 2,
                Method::MonteCarlo => 3,
            }
        }
        if rank(other) > rank(self) {
            other
        } else {
            self
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A value with an error estimate, generic over real/complex.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Estimate<T> {
    pub value: T,
    pub abs_error: f64,
    pub converged: bool,
}

impl<T: Scalar> Estimate<T> {
    pub fn exact(value: T) -> Self {
        Estimate {
            value,
            abs_error: 0.0,
            converged: true,
        }
    }

    pub fn new(value: T, abs_error: f64) -> Self {
        Estimate {
            value,
            abs_error,
            converged: true,
        }
    }

    pub fn scale(self, c: T) -> Self {
        Estimate {
            value: self.value * c,
            abs_error: self.abs_error * c.abs(),
            converged: self.converged,
        }
    }

    pub fn add(self, other: Estimate<T>) -> Self {
        Estimate {
            value: self.value + other.value,
            abs_error: self.abs_error + other.abs_error,
            converged: self.converged && other.converged,
        }
    }

    pub fn to_c64(self) -> Estimate<C64> {
        Estimate {
            value: self.value.to_c64(),
            abs_error: self.abs_error,
            converged: self.converged,
        }
    }
}

/// Complex result of an evaluator with its error estimate and provenance tag.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct IntegralValue {
    pub value: C64,
    pub abs_error: f64,
    pub method: Method,
    pub converged: bool,
}

impl IntegralValue {
    pub fn new(value: C64, abs_error: f64, method: Method) -> Self {
        IntegralValue {
            value,
            abs_error,
            method,
            converged: true,
        }
    }

    pub fn real(value: f64, abs_error: f64, method: Method) -> Self {
        Self::new(C64::new(value, 0.0), abs_error, method)
    }

    pub fn from_estimate<T: Scalar>(e: Estimate<T>, method: Method) -> Self {
        IntegralValue {
            value: e.value.to_c64(),
            abs_error: e.abs_error,
            method,
            converged: e.converged,
        }
    }

    pub fn estimate(&self) -> Estimate<C64> {
        Estimate {
            value: self.value,
            abs_error: self.abs_error,
            converged: self.converged,
        }
    }

    pub fn re(&self) -> f64 {
        self.value.re
    }

    pub fn im(&self) -> f64 {
        self.value.im
    }

    pub fn scale(self, c: C64) -> Self {
        IntegralValue {
            value: self.value * c,
            abs_error: self.abs_error * c.norm(),
            ..self
        }
    }

    pub fn add(self, other: IntegralValue) -> Self {
        IntegralValue {
            value: self.value + other.value,
            abs_error: self.abs_error + other.abs_error,
            method: self.method.combine(other.method),
            converged: self.converged && other.converged,
        }
    }

    /// Relative difference |a - b| / max(|a|, |b|).
    pub fn rel_diff(&self, other: &IntegralValue) -> f64 {
        let scale = self.value.norm().max(other.value.norm());
        if scale == 0.0 {
            0.0
        } else {
            (self.value - other.value).norm() / scale
        }
    }

    /// Distance in units of the combined error bars.
    pub fn sigma_distance(&self, other: &IntegralValue) -> f64 {
        let err = (self.abs_error.powi(2) + other.abs_error.powi(2)).sqrt();
        (self.value - other.value).norm() / err.max(f64::MIN_POSITIVE)
    }
}
