use thiserror::Error;

/// Errors shared by every module of the toolkit.
#[derive(Error, Debug)]
pub enum CoreError {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("empty mask where foreground is required: {0}")]
    EmptyMask(String),

    #[error("degenerate data: {0}")]
    Degenerate(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("did not converge: {0}")]
    NonConvergence(String),

    #[error("singular linear system: {0}")]
    SingularSystem(String),

    #[error("well detection failed: expected {expected} wells, found {found}")]
    DetectionFailure { expected: usize, found: usize },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("image codec error: {0}")]
    Codec(String),
}

pub type Result<T> = std::result::Result<T, CoreError>;
