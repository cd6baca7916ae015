use std::path::PathBuf;

use thiserror::Error;

use crate::pmean::PValue;

/// Errors raised by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("cannot access {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// Malformed input file or text.
    #[error("{origin}:{line}: {message}")]
    Format {
        origin: String,
        line: usize,
        message: String,
    },

    #[error("dimension mismatch in {context}: expected {expected}, found {found}")]
    Dimension {
        context: String,
        expected: usize,
        found: usize,
    },

    /// A power mean has no real value and the strict policy is active.
    #[error("power mean with p={p} is undefined in dimension {dim} (offending value {value})")]
    Undefined { p: PValue, dim: usize, value: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("unsupported {kind} document version {found} (expected {expected})")]
    UnsupportedVersion {
        kind: &'static str,
        found: u32,
        expected: u32,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Self::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn format(
        origin: impl Into<String>,
        line: usize,
        message: impl Into<String>,
    ) -> Self {
        Self::Format {
            origin: origin.into(),
            line,
            message: message.into(),
        }
    }

    pub(crate) fn dimension(context: impl Into<String>, expected: usize, found: usize) -> Self {
        Self::Dimension {
            context: context.into(),
            expected,
            found,
        }
    }

    /// True for errors caused by malformed or inconsistent input data.
    pub fn is_input_error(&self) -> bool {
        matches!(
            self,
            Self::Format { .. }
                | Self::Dimension { .. }
                | Self::InvalidArgument(_)
                | Self::UnsupportedVersion { .. }
                | Self::Json(_)
        )
    }

    /// True when a strict numerical policy rejected an undefined power mean.
    pub fn is_numerical_policy_error(&self) -> bool {
        matches!(self, Self::Undefined { .. })
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
