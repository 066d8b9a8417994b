//! Command-line front end for `egd-core`: argument definitions, the command
//! implementations and the SVG portrait renderer.

pub mod args;
pub mod commands;
pub mod portrait;

use thiserror::Error;

/// Failure of a command, carrying its process exit code.
#[derive(Debug, Error)]
pub enum CliError {
    /// Bad flags, unreadable or malformed input.
    #[error("{0}")]
    Input(String),
    /// The numerics could not produce an answer.
    #[error("{0}")]
    Numerical(String),
    /// A check ran and did not hold.
    #[error("{0}")]
    Assertion(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Assertion(_) => 1,
            CliError::Input(_) => 2,
            CliError::Numerical(_) => 3,
        }
    }
}

impl From<egd_core::Error> for CliError {
    fn from(e: egd_core::Error) -> Self {
        if e.is_input_error() {
            CliError::Input(e.to_string())
        } else {
            CliError::Numerical(e.to_string())
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Input(e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Input(e.to_string())
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
