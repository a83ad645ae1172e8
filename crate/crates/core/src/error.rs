use thiserror::Error;

/// Errors raised by the estimation toolkit.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("invalid keypoint layout: {0}")]
    Layout(String),

    #[error("invalid kinematic chain: {0}")]
    Chain(String),

    #[error("heatmap has no peak (all values zero)")]
    NoPeak,

    #[error("invalid heatmap: {0}")]
    Heatmap(String),

    #[error("point is behind the camera (depth {depth})")]
    BehindCamera { depth: f64 },

    #[error("insufficient correspondences: need at least {needed}, got {got}")]
    InsufficientCorrespondences { needed: usize, got: usize },

    #[error("degenerate configuration: {0}")]
    Degenerate(String),

    /// Solver failed to converge; carries the last iterate as (row-major rotation, translation).
    #[error("solver did not converge after {iterations} iterations")]
    NonConvergence {
        iterations: usize,
        rotation: [f64; 9],
        translation: [f64; 3],
    },

    #[error("training error: {0}")]
    Training(String),

    #[error("scenario generation failed: {0}")]
    Generation(String),

    #[error("format error: {0}")]
    Format(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Format(e.to_string())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
