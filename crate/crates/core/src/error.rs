use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("degenerate distribution: {0}")]
    Degenerate(String),

    #[error("grid mismatch: distributions were built on different grids")]
    GridMismatch,

    #[error("shape mismatch: expected {expected}, got {actual}")]
    ShapeMismatch { expected: usize, actual: usize },

    #[error("non-finite loss at step {step}: {detail}")]
    NonFinite { step: usize, detail: String },

    #[error(transparent)]
    Weights(#[from] WeightsError),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Failures reading an amortizer weight file.
#[derive(Debug, Error)]
pub enum WeightsError {
    #[error("not an ASG2VMF weight file (bad magic)")]
    BadMagic,

    #[error("unsupported weight file version {found} (expected {expected})")]
    Version { found: u32, expected: u32 },

    #[error("weight file layer shapes do not match the header: {0}")]
    Shape(String),

    #[error("weight file truncated: needed {needed} bytes, found {found}")]
    Truncated { needed: usize, found: usize },

    #[error("weight file has {0} trailing bytes")]
    TrailingBytes(usize),
}
