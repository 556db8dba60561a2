//! Crate-wide error type.

use std::path::PathBuf;

/// Errors produced by the library.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A vector argument did not match the expected dimensionality.
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    /// A scalar or structural argument was out of its documented range.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A numeric input (typically a gradient) contained NaN or infinity.
    #[error("non-finite {what} at index {index}")]
    NonFiniteInput { what: &'static str, index: usize },

    /// A forward pass produced NaN or infinity.
    #[error("non-finite activations in layer {layer}")]
    NonFiniteActivation { layer: usize },

    /// An IDX container failed to parse; `offset` is the byte position of the
    /// offending field.
    #[error("{}: invalid IDX data at byte {offset}: {message}", path.display())]
    IdxFormat {
        path: PathBuf,
        offset: u64,
        message: String,
    },

    /// Two series that must align had different lengths.
    #[error("series length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    /// An iterative solver hit its iteration cap.
    #[error("no convergence within {iterations} iterations (grad inf-norm {grad_norm:e})")]
    NoConvergence { iterations: u64, grad_norm: f64 },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
