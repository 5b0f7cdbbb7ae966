use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("gain `{name}` must be finite and strictly positive, got {value}")]
    InvalidGain { name: &'static str, value: f64 },

    #[error("undelayed system unstable: M1 + M2 is not Hurwitz")]
    UndelayedUnstable,

    #[error("matrix is not symmetric (largest asymmetry {0:e})")]
    NotSymmetric(f64),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("path loss exponent must exceed 2 for the interference integral to converge, got {0}")]
    DivergentInterference(f64),

    #[error("quadrature did not reach tolerance after {0} subdivisions")]
    QuadratureNotConverged(usize),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter { name, reason: reason.into() }
}
