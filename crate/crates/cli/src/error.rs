//! Command-level errors mapped onto process exit codes.

use std::fmt;

/// Exit code contract: 0 success, 2 configuration/usage error,
/// 3 numerical failure, 4 acceptance-check failure (verify-ops only).
#[derive(Debug)]
pub enum CliError {
    Config(String),
    Numerical(String),
    ChecksFailed(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numerical(_) => 3,
            CliError::ChecksFailed(_) => 4,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(msg) => write!(f, "configuration error: {msg}"),
            CliError::Numerical(msg) => write!(f, "numerical failure: {msg}"),
            CliError::ChecksFailed(msg) => write!(f, "checks failed: {msg}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<fracross_core::Error> for CliError {
    fn from(e: fracross_core::Error) -> Self {
        use fracross_core::Error as E;
        match &e {
            E::NumericalBlowup { .. }
            | E::PositivityFailure { .. }
            | E::TimeStepUnderflow { .. }
            | E::NonFinite(_) => CliError::Numerical(e.to_string()),
            _ => CliError::Config(e.to_string()),
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;
