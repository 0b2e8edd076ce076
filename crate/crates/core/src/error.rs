//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Malformed edge-list or spec file content, with the offending line.
    #[error("parse error in {origin} at line {line}: {message}")]
    Parse {
        origin: String,
        line: usize,
        message: String,
    },

    /// A file contained no edges at all.
    #[error("empty graph: {0}")]
    EmptyGraph(String),

    /// A caller-supplied value violates a precondition.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A dense computation was refused because its output would be too large.
    #[error("size cap exceeded: {0}")]
    SizeCap(String),

    /// The iterative SVD did not reach the requested tolerance.
    #[error(
        "singular value decomposition did not converge within {sweeps} sweeps \
         (worst residual {worst_residual:.3e}, required {required:.3e})"
    )]
    NonConvergence {
        sweeps: usize,
        worst_residual: f64,
        required: f64,
        /// Residual ‖m·v − σ·u‖₂ per requested triplet at the final sweep.
        residuals: Vec<f64>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("serialization error: {0}")]
    Serialization(#[from] serde_json::Error),
}
