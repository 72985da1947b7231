//! CLI error taxonomy mapped to exit codes: 1 usage, 2 data, 3 internal.

use std::fmt;

pub type Result<T> = std::result::Result<T, CliError>;

#[derive(Debug)]
pub enum CliError {
    /// Bad flags or configuration; the user has to change the invocation.
    Usage(String),
    /// Unreadable or invalid input data / model / plan files.
    Data(String),
    /// Everything that should never happen on valid input.
    Internal(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) => 2,
            CliError::Internal(_) => 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(msg) => write!(f, "usage error: {msg}"),
            CliError::Data(msg) => write!(f, "data error: {msg}"),
            CliError::Internal(msg) => write!(f, "internal error: {msg}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<gbst_core::Error> for CliError {
    fn from(err: gbst_core::Error) -> Self {
        use gbst_core::Error;
        match err {
            Error::InvalidParameter(_) | Error::InvalidGrid(_) => CliError::Usage(err.to_string()),
            Error::Io(_) | Error::Csv(_) | Error::Json(_) | Error::Data(_)
            | Error::EmptyDataset | Error::InvalidTime(_) | Error::DimensionMismatch { .. } => {
                CliError::Data(err.to_string())
            }
            _ => CliError::Internal(err.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(err: std::io::Error) -> Self {
        CliError::Data(err.to_string())
    }
}
