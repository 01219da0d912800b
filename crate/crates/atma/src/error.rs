use std::io;
use std::path::PathBuf;

/// Process exit status: 0 success, 1 failed verification, 2 I/O, 3 bad input.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExitCode {
    Success = 0,
    VerificationFailed = 1,
    Io = 2,
    Format = 3,
}

#[derive(Debug, thiserror::Error)]
pub enum AppError {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },

    #[error("{source_name}: {message}")]
    Format {
        source_name: String,
        message: String,
    },

    #[error(transparent)]
    Model(#[from] atma_core::Error),

    #[error("{0}")]
    Invalid(String),
}

impl AppError {
    pub fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        AppError::Io {
            path: path.into(),
            source,
        }
    }

    pub fn format(source_name: impl Into<String>, message: impl Into<String>) -> Self {
        AppError::Format {
            source_name: source_name.into(),
            message: message.into(),
        }
    }

    pub fn exit_code(&self) -> ExitCode {
        match self {
            AppError::Io { .. } => ExitCode::Io,
            _ => ExitCode::Format,
        }
    }
}

pub type Result<T, E = AppError> = std::result::Result<T, E>;
