use thiserror::Error;

/// Errors produced anywhere in the solver stack.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A size, qubit count or preset value is outside the supported range.
    #[error("configuration error: {0}")]
    Config(String),
    /// The caller combined objects that do not fit together (index clash, size mismatch).
    #[error("usage error: {0}")]
    Usage(String),
    /// A projective measurement hit an outcome with (numerically) zero probability.
    #[error("projection onto outcome {outcome:#b} has probability {probability:e}")]
    DegenerateProjection { outcome: u64, probability: f64 },
    /// A function with all node values zero cannot be loaded as a normalized state.
    #[error("function vanishes at every node; represent it with a zero weight instead")]
    ZeroFunction,
    /// The problem cannot be handled by the requested solver path.
    #[error("unsupported problem: {0}")]
    Unsupported(String),
    /// A loss or gradient became NaN or infinite.
    #[error("numerical failure: {0}")]
    NonFinite(String),
    /// Problem file could not be parsed.
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
