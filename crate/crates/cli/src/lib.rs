//! Operator commands behind the `metahint` binary.

pub mod analyze;
pub mod fixture;
pub mod simulate;

use thiserror::Error;

/// Exit codes: 0 ok, 2 configuration problem, 3 bad data.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("{0}")]
    Data(String),
    #[error("{0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Data(_) => 3,
            CliError::Io(_) => 1,
        }
    }
}
