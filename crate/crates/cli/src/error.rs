use abs_core::Error as CoreError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),
    #[error("config error: {0}")]
    Config(String),
    #[error("{0}")]
    Numerical(String),
    #[error("output error: {0}")]
    Output(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Config(_) => 3,
            CliError::Numerical(_) => 4,
            CliError::Output(_) => 1,
        }
    }

    pub fn config(path: &std::path::Path, message: impl std::fmt::Display) -> Self {
        CliError::Config(format!("{}: {message}", path.display()))
    }
}

/// Errors caused by the model inputs count as config errors, the rest as
/// numerical failures.
impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        match e {
            CoreError::Config { .. }
            | CoreError::Json(_)
            | CoreError::Parse(_)
            | CoreError::Model(_)
            | CoreError::Capacity { .. }
            | CoreError::Assignment(_)
            | CoreError::IncompleteRule(_)
            | CoreError::DegenerateLabels => CliError::Config(e.to_string()),
            other => CliError::Numerical(other.to_string()),
        }
    }
}
