use thiserror::Error;

/// Errors produced by the numerical routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// A state vector or wavefunction does not have unit norm.
    #[error("state is not normalized (squared norm {norm_sq})")]
    NotNormalized { norm_sq: f64 },

    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// Input data violates a structural constraint (probabilities, no-signalling, ...).
    #[error("invalid input: {0}")]
    Input(String),

    /// The grid is too small to hold the requested object.
    #[error("grid truncation: {0}")]
    Truncation(String),

    /// The grid resolution is too coarse for a requested tolerance.
    #[error("grid resolution: {0}")]
    Resolution(String),
}

pub type Result<T> = std::result::Result<T, Error>;
