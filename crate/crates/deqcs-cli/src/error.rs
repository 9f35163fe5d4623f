//! CLI error taxonomy and exit-code mapping.
//!
//! Exit codes: 0 success, 2 configuration error (bad flags, unparseable or
//! unknown config keys, unreadable/unwritable paths, invalid parameter
//! combinations), 3 numeric failure (diverged training, NaN losses,
//! infeasible numeric requests).

use std::process::ExitCode;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("numeric failure: {0}")]
    Numeric(String),
}

pub type Result<T> = std::result::Result<T, CliError>;

impl CliError {
    pub fn exit_code(&self) -> ExitCode {
        match self {
            CliError::Config(_) => ExitCode::from(2),
            CliError::Numeric(_) => ExitCode::from(3),
        }
    }
}

impl From<deqcs::Error> for CliError {
    fn from(e: deqcs::Error) -> Self {
        match e {
            deqcs::Error::Numeric(msg) => CliError::Numeric(msg),
            other => CliError::Config(other.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Config(format!("i/o: {e}"))
    }
}

/// Shorthand for building a config error.
pub fn cfg_err(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}
