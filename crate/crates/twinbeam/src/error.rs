use std::path::PathBuf;

use twinbeam_core::{Error as CoreError, TraceKind};

#[derive(Debug, thiserror::Error)]
pub enum AppError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("configuration error: {0}")]
    Config(String),
    #[error("{path}: malformed trace header: {reason}")]
    BadHeader { path: PathBuf, reason: String },
    #[error("{path}: config digest mismatch (trace {found}, expected {expected})")]
    DigestMismatch {
        path: PathBuf,
        expected: String,
        found: String,
    },
    #[error("{path}: trace kind `{}` cannot be used for {expected}", found.name())]
    KindMismatch {
        path: PathBuf,
        expected: String,
        found: TraceKind,
    },
    #[error("invalid input set: {0}")]
    Inputs(String),
    #[error("Nyquist violation: {0}")]
    Nyquist(CoreError),
    #[error("invalid input: {0}")]
    Validation(CoreError),
    #[error("analysis failed: {0}")]
    Analysis(CoreError),
}

impl AppError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        AppError::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit status: 2 validation, 3 I/O, 4 analysis failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            AppError::Io { .. } => 3,
            AppError::Analysis(_) => 4,
            _ => 2,
        }
    }
}

impl From<CoreError> for AppError {
    fn from(e: CoreError) -> Self {
        match e {
            CoreError::Nyquist { .. } => AppError::Nyquist(e),
            CoreError::InvalidParameter { .. }
            | CoreError::MissingMarkers
            | CoreError::InvalidMarkers
            | CoreError::WindowOutOfBounds { .. }
            | CoreError::KindMismatch { .. }
            | CoreError::Incompatible(_) => AppError::Validation(e),
            _ => AppError::Analysis(e),
        }
    }
}

pub type AppResult<T> = Result<T, AppError>;
