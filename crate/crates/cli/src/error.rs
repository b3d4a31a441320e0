use std::path::PathBuf;

use lonr::LonrError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid config: {0}")]
    Config(String),

    #[error("missing results: {0}")]
    MissingResults(String),

    #[error("run failed: {0}")]
    Runtime(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },

    #[error("acceptance check failed: {0}")]
    CheckFailed(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Config(_) | Self::MissingResults(_) => 1,
            Self::Runtime(_) | Self::Io { .. } => 2,
            Self::CheckFailed(_) => 3,
        }
    }

    pub fn io(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> Self {
        let path = path.into();
        move |source| Self::Io { path, source }
    }
}

/// Library errors raised while validating input are config errors; the runner
/// maps its own failures to `Runtime` explicitly.
impl From<LonrError> for CliError {
    fn from(err: LonrError) -> Self {
        Self::Config(err.to_string())
    }
}
