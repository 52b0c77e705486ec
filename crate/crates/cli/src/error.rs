use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("invalid `{field}`: {message}")]
    Validation { field: String, message: String },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {message}")]
    Data { path: PathBuf, message: String },
    #[error(transparent)]
    Model(#[from] agelab::Error),
    #[error("{0} verification check(s) failed")]
    Verification(usize),
}

impl CliError {
    pub fn validation(field: impl Into<String>, message: impl Into<String>) -> Self {
        Self::Validation {
            field: field.into(),
            message: message.into(),
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Self::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code: 2 validation, 3 numerical, 4 verification.
    pub fn exit_code(&self) -> i32 {
        use agelab::Error as E;
        match self {
            Self::Parse { .. } | Self::Validation { .. } | Self::Io { .. } | Self::Data { .. } => 2,
            Self::Model(E::InvalidParameter { .. } | E::NoPositiveEquilibrium(_) | E::OutOfRegime(_)) => 2,
            Self::Model(_) => 3,
            Self::Verification(_) => 4,
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
