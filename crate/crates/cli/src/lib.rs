//! Scenario driver behind the `lightstore` binary.

pub mod config;
pub mod output;
pub mod run;

use std::fmt;

/// Failure classes mapped to process exit codes.
#[derive(Debug)]
pub enum CliError {
    Config(String),
    Compute { module: &'static str, source: lightstore::Error },
    Io(String),
    Internal(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Compute { .. } | CliError::Internal(_) => 3,
            CliError::Io(_) => 4,
        }
    }

    pub(crate) fn compute(module: &'static str) -> impl Fn(lightstore::Error) -> CliError {
        move |source| CliError::Compute { module, source }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "config error: {m}"),
            CliError::Compute { module, source } => write!(f, "computation error in {module}: {source}"),
            CliError::Io(m) => write!(f, "I/O error: {m}"),
            CliError::Internal(m) => write!(f, "internal error: {m}"),
        }
    }
}

impl std::error::Error for CliError {}
