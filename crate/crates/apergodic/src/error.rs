use std::path::PathBuf;

use thiserror::Error;

/// Failures of a harness run, grouped by exit code.
#[derive(Debug, Error)]
pub enum RunError {
    #[error("{field}: {msg}")]
    Validation { field: String, msg: String },
    #[error("config does not parse: {0}")]
    Syntax(#[from] serde_json::Error),
    #[error("numeric failure: {0}")]
    Numeric(apergodic_core::Error),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("artifact {name} differs from the golden copy{detail}")]
    GoldenMismatch { name: String, detail: String },
    #[error("thread pool: {0}")]
    Pool(#[from] rayon::ThreadPoolBuildError),
}

impl RunError {
    pub fn invalid(field: impl Into<String>, msg: impl Into<String>) -> Self {
        RunError::Validation { field: field.into(), msg: msg.into() }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        RunError::Io { path: path.into(), source }
    }

    /// Process exit code: 2 for bad input, 3 for numeric failures, 1 otherwise.
    pub fn exit_code(&self) -> u8 {
        match self {
            RunError::Validation { .. } | RunError::Syntax(_) => 2,
            RunError::Numeric(_) => 3,
            RunError::Io { .. } | RunError::GoldenMismatch { .. } | RunError::Pool(_) => 1,
        }
    }
}

impl From<apergodic_core::Error> for RunError {
    fn from(e: apergodic_core::Error) -> Self {
        use apergodic_core::Error as E;
        match e {
            E::Parse { .. } | E::InvalidInput(_) | E::Grid(_) => RunError::invalid("experiment", e.to_string()),
            other => RunError::Numeric(other),
        }
    }
}

pub type Result<T, E = RunError> = std::result::Result<T, E>;
