use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] pmean::Error),

    #[error("cannot write {path}: {source}")]
    Write {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{0}")]
    Usage(String),
}

pub mod exit {
    pub const OK: i32 = 0;
    pub const FAILURE: i32 = 1;
    pub const INPUT: i32 = 2;
    pub const NUMERICAL: i32 = 3;
    pub const USAGE: i32 = 64;
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Core(e) if e.is_numerical_policy_error() => exit::NUMERICAL,
            Self::Core(e) if e.is_input_error() => exit::INPUT,
            Self::Core(_) | Self::Write { .. } => exit::FAILURE,
            Self::Usage(_) => exit::USAGE,
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;
