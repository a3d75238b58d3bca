use std::path::PathBuf;

use thiserror::Error;

pub type AppResult<T> = Result<T, AppError>;

#[derive(Debug, Error)]
pub enum AppError {
    #[error("invalid value for `{field}`: got `{value}`, expected {allowed}")]
    InvalidValue { field: String, value: String, allowed: String },
    #[error("unknown configuration key `{0}`")]
    UnknownKey(String),
    #[error("cannot use config file {}: {message}", path.display())]
    ConfigFile { path: PathBuf, message: String },
    #[error("malformed file {}: {message}", path.display())]
    Parse { path: PathBuf, message: String },
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{context}: {source}")]
    Csv { context: String, source: csv::Error },
    #[error("{context}: {source}")]
    Json { context: String, source: serde_json::Error },
    #[error(transparent)]
    Core(#[from] afrelay_core::Error),
    #[error("point {point} failed: {message}")]
    Point { point: String, message: String },
}

impl AppError {
    /// Process exit code: 2 for usage errors, 1 for runtime failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::InvalidValue { .. } | Self::UnknownKey(_) | Self::ConfigFile { .. } => 2,
            _ => 1,
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Self::Io { path: path.into(), source }
    }
}
