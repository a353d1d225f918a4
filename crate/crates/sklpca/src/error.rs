//! Crate-wide error type and result alias.

use thiserror::Error;

/// Errors produced by dataset validation, kernel construction, estimation,
/// and numerical routines.
#[derive(Debug, Error)]
pub enum Error {
    /// Matrix or vector dimensions do not line up.
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    /// A parameter or configuration value is invalid before any computation.
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    /// Input data cannot support the requested computation (too few rows,
    /// subjects, or held-out observations).
    #[error("insufficient data: {0}")]
    InsufficientData(String),

    /// Subject grouping violates the contiguity or minimum-size contract.
    #[error("invalid group index: {0}")]
    InvalidGroups(String),

    /// Data is structurally valid but carries no usable signal
    /// (identical rows, constant outcomes).
    #[error("degenerate data: {0}")]
    DegenerateData(String),

    /// A subject id was requested that the model was not trained on.
    #[error("unknown subject: {0}")]
    UnknownSubject(String),

    /// Feature screening selected no features; callers may skip screening.
    #[error("screening selected no features")]
    ScreeningEmpty,

    /// A numerical routine failed after its internal escalation strategy.
    #[error("numerical failure: {0}")]
    Numerical(String),

    /// Underlying I/O failure.
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    /// Malformed CSV or model file content.
    #[error("parse error: {0}")]
    Parse(String),
}

impl Error {
    /// True for failures of numerical routines (exit code 2 at the CLI),
    /// as opposed to validation errors (exit code 1).
    pub fn is_numerical(&self) -> bool {
        matches!(self, Error::Numerical(_))
    }
}

pub type Result<T> = std::result::Result<T, Error>;
