use std::path::Path;

/// Top-level failure classification: bad inputs exit with 2, failures
/// inside the pipeline exit with 1.
#[derive(Debug, thiserror::Error)]
pub enum AppError {
    #[error("{0}")]
    Input(String),
    #[error("{0}")]
    Pipeline(String),
}

impl AppError {
    pub fn exit_code(&self) -> i32 {
        match self {
            AppError::Input(_) => 2,
            AppError::Pipeline(_) => 1,
        }
    }

    pub fn input(msg: impl Into<String>) -> Self {
        AppError::Input(msg.into())
    }

    pub fn format(path: &Path, msg: impl std::fmt::Display) -> Self {
        AppError::Input(format!("{}: {msg}", path.display()))
    }
}

impl From<retrack_core::Error> for AppError {
    fn from(e: retrack_core::Error) -> Self {
        AppError::Pipeline(e.to_string())
    }
}

pub type AppResult<T> = Result<T, AppError>;
