use thiserror::Error;

/// Errors raised by model construction and the optimizers.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid value for `{key}`: {reason}")]
    InvalidConfig { key: String, reason: String },

    #[error("degenerate geometry: {0}")]
    DegenerateGeometry(String),

    #[error("steering vector needs at least one element")]
    EmptyArray,

    #[error("path loss needs positive distance and frequency (got d = {distance} m, f = {frequency} Hz)")]
    InvalidPathLoss { distance: f64, frequency: f64 },

    #[error("denominator matrix is not positive definite (smallest eigenvalue {0:e})")]
    SingularDenominator(f64),

    #[error("channel stack has rank {rank} = N; the null space is empty")]
    EmptyNullSpace { rank: usize },

    #[error("dual bisection could not bracket the multiplier within [0, {0:e}]")]
    Bracket(f64),

    #[error("numerical corruption: {0}")]
    Numerical(String),
}

impl Error {
    pub(crate) fn config(key: &str, reason: impl Into<String>) -> Self {
        Error::InvalidConfig {
            key: key.to_string(),
            reason: reason.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
