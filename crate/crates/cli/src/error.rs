use std::path::{Path, PathBuf};

use thiserror::Error;

pub type Result<T, E = LabError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum LabError {
    #[error("{}:{line}: {message}", .path.display())]
    Parse { path: PathBuf, line: usize, message: String },

    #[error("invalid `{field}`: {reason}")]
    Validation { field: String, reason: String },

    #[error("I/O error at {}: {source}", .path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{0}")]
    Usage(String),

    #[error("scenario `{name}` failed: {source}")]
    Run {
        name: String,
        #[source]
        source: mcf_core::Error,
    },

    #[error("{failed} of {total} acceptance criteria failed")]
    Acceptance { failed: usize, total: usize },
}

impl LabError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        LabError::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    pub fn invalid(field: impl Into<String>, reason: impl Into<String>) -> Self {
        LabError::Validation {
            field: field.into(),
            reason: reason.into(),
        }
    }

    /// 1 for failed runs and criteria, 2 for usage, configuration and I/O
    /// problems.
    pub fn exit_code(&self) -> i32 {
        match self {
            LabError::Run { .. } | LabError::Acceptance { .. } => 1,
            LabError::Parse { .. } | LabError::Validation { .. } | LabError::Io { .. } | LabError::Usage(_) => 2,
        }
    }
}
