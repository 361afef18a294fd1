use tailq::TailError;
use thiserror::Error;

/// Failures with their process exit codes.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Validation(String),
    #[error("{0}")]
    Infeasible(String),
    #[error("{0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 1,
            CliError::Infeasible(_) => 2,
            CliError::Io(_) => 3,
        }
    }
}

impl From<TailError> for CliError {
    fn from(e: TailError) -> Self {
        if e.is_computational() {
            CliError::Infeasible(e.to_string())
        } else {
            CliError::Validation(e.to_string())
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}
