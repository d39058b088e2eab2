use mirl_core::error::Error as CoreError;

/// Exit code 1: bad input. Exit code 2: failure while running.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Validation(String),
    #[error("{0}")]
    Runtime(String),
}

pub type CliResult<T> = Result<T, CliError>;

impl CliError {
    pub fn validation(msg: impl Into<String>) -> Self {
        Self::Validation(msg.into())
    }

    pub fn runtime(msg: impl Into<String>) -> Self {
        Self::Runtime(msg.into())
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Validation(_) => 1,
            Self::Runtime(_) => 2,
        }
    }
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        match e {
            CoreError::InvalidInput(_)
            | CoreError::Shape(_)
            | CoreError::Capacity { .. }
            | CoreError::Parse { .. }
            | CoreError::Json(_) => Self::Validation(e.to_string()),
            CoreError::Convergence { .. } | CoreError::Numeric(_) | CoreError::Io(_) => {
                Self::Runtime(e.to_string())
            }
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        Self::Runtime(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        Self::Runtime(e.to_string())
    }
}
