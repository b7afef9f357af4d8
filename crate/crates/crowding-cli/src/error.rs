//! Error categories of the command-line tool and their exit codes.

use thiserror::Error;

/// Exit status for malformed or invalid input files, configs and arguments.
pub const EXIT_INPUT: i32 = 3;
/// Exit status for numerical failures (integration, empty results, missing bounds).
pub const EXIT_NUMERICAL: i32 = 4;
/// Exit status for an unusable bound-table cache.
pub const EXIT_CACHE: i32 = 5;
/// Exit status for failures to read inputs or write outputs.
pub const EXIT_IO: i32 = 6;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("input error: {0}")]
    Input(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("cache error: {0}")]
    Cache(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) => EXIT_INPUT,
            CliError::Numerical(_) => EXIT_NUMERICAL,
            CliError::Cache(_) => EXIT_CACHE,
            CliError::Io(_) => EXIT_IO,
        }
    }

    pub fn io(path: &std::path::Path, e: impl std::fmt::Display) -> Self {
        CliError::Io(format!("{}: {e}", path.display()))
    }
}

impl From<crowding::Error> for CliError {
    fn from(e: crowding::Error) -> Self {
        match e {
            crowding::Error::MissingBound(_) => CliError::Numerical(e.to_string()),
            _ if e.is_numerical() => CliError::Numerical(e.to_string()),
            _ => CliError::Input(e.to_string()),
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;
