use std::process::ExitCode;

use thiserror::Error;

/// Failures of a command, each mapped to a process exit status.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("solver failed: {0}")]
    Solver(rhcontract::Error),
    #[error("audit failed: {0}")]
    Audit(String),
}

impl CliError {
    pub fn code(&self) -> u8 {
        match self {
            CliError::Config(_) => 1,
            CliError::Solver(_) => 2,
            CliError::Audit(_) => 3,
        }
    }

    pub fn exit_code(&self) -> ExitCode {
        ExitCode::from(self.code())
    }
}

impl From<rhcontract::Error> for CliError {
    fn from(e: rhcontract::Error) -> Self {
        use rhcontract::Error as E;
        match e {
            E::Audit(msg) => CliError::Audit(msg),
            E::Domain(_) | E::Range(_) | E::Grid(_) | E::Horizon { .. } | E::Io(_) => CliError::Config(e.to_string()),
            other => CliError::Solver(other),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Config(e.to_string())
    }
}

pub type CliResult<T> = Result<T, CliError>;
