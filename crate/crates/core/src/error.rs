use std::io;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    Dimension { expected: usize, found: usize },

    #[error("model is not stationary: spectral radius {radius} >= 1")]
    NonStationary { radius: f64 },

    #[error("numerical failure: {0}")]
    Numeric(String),

    #[error("enumeration of {combinations} thinning outcomes exceeds the limit of {limit}")]
    EnumerationLimit { combinations: u128, limit: u128 },

    /// Every problem found while validating an experiment specification.
    #[error("invalid experiment spec:\n  {}", .0.join("\n  "))]
    InvalidSpec(Vec<String>),

    /// Malformed input file content.
    #[error("format error: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn format(msg: impl Into<String>) -> Self {
        Error::Format(msg.into())
    }
}
