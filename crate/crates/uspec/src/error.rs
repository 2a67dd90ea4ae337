use thiserror::Error;

/// Errors produced by the clustering toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    /// Malformed input data (ragged CSV rows, unparseable cells, truncated
    /// binary payloads).
    #[error("format error: {0}")]
    Format(String),

    /// A value violates a precondition (non-finite entry, empty input,
    /// out-of-range count).
    #[error("invalid value: {0}")]
    Value(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("labeling length mismatch: {a} vs {b}")]
    LengthMismatch { a: usize, b: usize },

    /// Inconsistent run configuration, detected before any work starts.
    #[error("invalid configuration: {0}")]
    Config(String),

    /// The bipartite graph is unusable (e.g. an object row with no edges).
    #[error("degenerate graph: {0}")]
    DegenerateGraph(String),

    #[error("eigensolver failed: {0}")]
    EigenFailure(String),
}

pub type Result<T> = std::result::Result<T, Error>;
