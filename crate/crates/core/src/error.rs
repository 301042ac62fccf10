use thiserror::Error;

/// Errors raised by model construction, operator algebra and the experiment drivers.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("order {order} exceeds the supported cap {cap}")]
    OrderCap { order: usize, cap: usize },

    #[error("invalid argument `{field}`: {reason}")]
    InvalidArgument { field: String, reason: String },

    #[error("distribution `{0}` has no Lebesgue density")]
    NoDensity(String),

    #[error("covariance is singular (smallest eigenvalue {min_eigenvalue:e})")]
    SingularCovariance { min_eigenvalue: f64 },

    #[error("quadrature did not converge: change {change:e} exceeds tolerance {tolerance:e}")]
    QuadratureNotConverged { change: f64, tolerance: f64 },

    #[error("rejection sampler acceptance probability {acceptance:e} is below 1e-3; certificate rejected")]
    RejectionRate { acceptance: f64 },

    #[error("invalid Doeblin certificate: {0}")]
    Certificate(String),

    #[error("root count {count} exceeds the degree bound {bound}")]
    RootCountExceeded { count: usize, bound: usize },

    #[error("super kernel moment of order {k} is {value:e}, above tolerance")]
    KernelMoment { k: usize, value: f64 },
}

impl Error {
    pub(crate) fn arg(field: &str, reason: impl Into<String>) -> Self {
        Error::InvalidArgument {
            field: field.to_string(),
            reason: reason.into(),
        }
    }

    /// True for failures of a numerical guard (as opposed to bad input).
    pub fn is_numerical_guard(&self) -> bool {
        matches!(
            self,
            Error::SingularCovariance { .. }
                | Error::QuadratureNotConverged { .. }
                | Error::RejectionRate { .. }
                | Error::RootCountExceeded { .. }
                | Error::KernelMoment { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
