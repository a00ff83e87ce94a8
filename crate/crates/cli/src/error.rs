//! Error classes mapped to process exit codes: usage 1, data 2,
//! internal 3.

use std::fmt;

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Data(String),
    Internal(String),
}

pub type CliResult<T> = Result<T, CliError>;

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) => 2,
            CliError::Internal(_) => 3,
        }
    }

    /// Attach the file a data error came from.
    pub fn in_file(self, path: &std::path::Path) -> CliError {
        match self {
            CliError::Data(msg) => CliError::Data(format!("{}: {msg}", path.display())),
            other => other,
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

impl From<trihealth::Error> for CliError {
    fn from(err: trihealth::Error) -> Self {
        CliError::Data(err.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(err: std::io::Error) -> Self {
        CliError::Data(err.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(err: csv::Error) -> Self {
        // csv errors carry line positions for corrupt-input reports
        CliError::Data(err.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(err: serde_json::Error) -> Self {
        CliError::Data(format!("line {}: {err}", err.line()))
    }
}
