use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("zero wavevector has no divergence-free basis")]
    ZeroWavevector,
    #[error("grid violates dealiasing rule: {points} points per axis, need at least {required}")]
    AliasingRule { points: usize, required: usize },
    #[error("p+q sum leaves the stored mode ball ({lost} terms dropped)")]
    BoxOverflow { lost: usize },
    #[error("need at least {need} samples, got {got}")]
    InsufficientSamples { need: usize, got: usize },
    #[error("numerical abort at step {step}: {reason}")]
    NumericalAbort { step: u64, reason: String },
    #[error("non-stationary input: {0}")]
    NonStationary(String),
    #[error("checkpoint: {0}")]
    Checkpoint(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
