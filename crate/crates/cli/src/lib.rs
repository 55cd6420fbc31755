//! Command-line front end: TOML configuration, subcommand dispatch and
//! deterministic report emission.

pub mod commands;
pub mod config;
pub mod report;

use std::path::PathBuf;

/// Failures, each mapped to a process exit code.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("validation failed: {0}")]
    Validation(String),
    #[error("numerical failure: {0}")]
    Numeric(String),
    #[error("{0}")]
    Usage(String),
    #[error("malformed configuration: {0}")]
    Config(String),
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Validation(_) => 2,
            CliError::Numeric(_) => 3,
            CliError::Usage(_) => 64,
            CliError::Config(_) => 65,
            CliError::Io { .. } => 74,
        }
    }
}

impl From<iterint::Error> for CliError {
    fn from(e: iterint::Error) -> Self {
        use iterint::Error as E;
        match e {
            E::Quadrature { .. } | E::NonFinite { .. } => CliError::Numeric(e.to_string()),
            _ => CliError::Validation(e.to_string()),
        }
    }
}
