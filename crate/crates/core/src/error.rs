use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LonrError {
    #[error("invalid environment: {0}")]
    InvalidEnvironment(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("non-finite value encountered: {0}")]
    NonFinite(String),

    #[error("empty input: {0}")]
    EmptyInput(String),

    #[error("iteration cap of {0} exceeded")]
    IterationCap(usize),

    #[error("bound violated: {0}")]
    BoundViolated(String),

    #[error("serialization failed: {0}")]
    Serialization(String),
}

impl From<serde_json::Error> for LonrError {
    fn from(err: serde_json::Error) -> Self {
        LonrError::Serialization(err.to_string())
    }
}

pub type Result<T> = std::result::Result<T, LonrError>;
