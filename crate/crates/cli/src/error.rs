use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Validation(String),

    #[error(transparent)]
    Core(#[from] bellforge_core::Error),

    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },

    #[error("{context}: {source}")]
    Json { context: String, source: serde_json::Error },

    #[error("writing CSV: {0}")]
    Csv(#[from] csv::Error),
}

impl CliError {
    /// 2 for bad input or configuration, 3 when the grid cannot resolve the
    /// requested state.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Core(bellforge_core::Error::Resolution(_)) => 3,
            _ => 2,
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;
