//! The `fwe` command-line front end.
//!
//! Exit codes: 0 success, 2 configuration error, 3 solver failure, 4 missing
//! input data, 5 validation failure.

pub mod args;
mod commands;

use std::path::PathBuf;

use thiserror::Error;

pub use commands::run;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("{message}{}", partial.as_ref().map(|p| format!("; partial results in {}", p.display())).unwrap_or_default())]
    Solver {
        message: String,
        partial: Option<PathBuf>,
    },
    #[error("{0}")]
    Missing(String),
    #[error("{0}")]
    Validation(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Solver { .. } => 3,
            CliError::Missing(_) => 4,
            CliError::Validation(_) => 5,
        }
    }
}

impl From<fiberweave::catalog::CatalogError> for CliError {
    fn from(e: fiberweave::catalog::CatalogError) -> Self {
        CliError::Config(e.to_string())
    }
}
