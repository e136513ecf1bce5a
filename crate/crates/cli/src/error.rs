use std::path::PathBuf;

use thiserror::Error;

use crate::config::ConfigError;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Config(#[from] ConfigError),

    #[error("{0}")]
    Usage(String),

    #[error("simulation failed: {0}")]
    Simulation(#[from] ottokz_core::Error),

    #[error("fit failed: {0}")]
    Fit(String),

    #[error("fitted exponent {fitted} deviates from the predicted {predicted} by {deviation} > {tol}")]
    AssertFailed {
        fitted: f64,
        predicted: f64,
        deviation: f64,
        tol: f64,
    },

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },

    #[error("{0}")]
    Internal(String),
}

impl CliError {
    /// 2 for configuration and usage problems, 3 for simulation failures,
    /// 4 for fit failures, 1 for anything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Usage(_) => 2,
            CliError::Simulation(_) => 3,
            CliError::Fit(_) | CliError::AssertFailed { .. } => 4,
            CliError::Io { .. } | CliError::Internal(_) => 1,
        }
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Internal(e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Internal(e.to_string())
    }
}
