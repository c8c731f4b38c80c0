use thiserror::Error;

/// Errors raised by the evaluators.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("mass of leg {leg} must be positive, got {value}")]
    NonPositiveMass { leg: usize, value: f64 },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("index {index} out of range for dimension {dim}")]
    IndexOutOfRange { index: usize, dim: usize },

    #[error("matrix dimension {0} exceeds the supported maximum of 9")]
    MatrixTooLarge(usize),

    #[error("singular matrix: |det| = {det:e} below threshold {threshold:e}")]
    SingularMatrix { det: f64, threshold: f64 },

    #[error("matrix is not positive definite")]
    NotPositiveDefinite,

    #[error("diagonal entry must be positive, got {0}")]
    NonPositiveDiagonal(f64),

    #[error("correlation {0} outside the open interval (-1, 1)")]
    OutOfRange(f64),

    #[error("degenerate conditioning: {0}")]
    DegenerateConditioning(String),

    #[error("quadrature did not converge: value {value:e}, error estimate {abs_error:e}")]
    NonConvergence { value: f64, abs_error: f64 },

    #[error("contour tail {tail:e} dominates value {value:e}")]
    TailDominates { tail: f64, value: f64 },

    #[error("divergent integral: {0}")]
    DivergentIntegral(String),

    #[error("assembly limit exceeded: {0} legs after augmentation (max 7)")]
    AssemblyLimit(usize),

    #[error("momenta inconsistent with invariants: k2[{i}][{j}] = {expected}, momenta give {found}")]
    InconsistentMomenta { i: usize, j: usize, expected: f64, found: f64 },

    #[error("branch discontinuity along continuation path: {0}")]
    BranchDiscontinuity(String),

    #[error("unsupported: {0}")]
    Unsupported(String),
}

impl Error {
    /// True for errors signalling an ill-defined (divergent) integral rather
    /// than a numerical failure.
    pub fn is_divergent(&self) -> bool {
        matches!(self, Error::DivergentIntegral(_))
    }

    /// True for errors that come from bad input rather than numerics.
    pub fn is_input(&self) -> bool {
        matches!(
            self,
            Error::NonPositiveMass { .. }
                | Error::InvalidConfig(_)
                | Error::IndexOutOfRange { .. }
                | Error::InconsistentMomenta { .. }
                | Error::Unsupported(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
