use thiserror::Error;

/// Errors raised by the core library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("expected {expected} coefficients for cutoff {cutoff}, got {got}")]
    LengthMismatch {
        cutoff: usize,
        expected: usize,
        got: usize,
    },
    #[error("non-finite amplitude at frequency {freq}")]
    NonFinite { freq: i64 },
    #[error("cutoff mismatch: {left} vs {right}")]
    CutoffMismatch { left: usize, right: usize },
    #[error("projection cutoff {requested} exceeds field cutoff {cutoff}")]
    ProjectionTooLarge { requested: usize, cutoff: usize },
    #[error("{points} grid points alias a field with {modes} modes")]
    Aliasing { points: usize, modes: usize },
    #[error("time grid is not uniform: {0}")]
    NonUniformGrid(String),
    #[error("grid too coarse: {points} points on [0, T], need at least {required}")]
    GridTooCoarse { points: usize, required: usize },
    #[error("exponent window violated: {0}")]
    ExponentWindow(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("zero norm: {0}")]
    ZeroNorm(String),
    #[error("non-finite state at step {step}; last valid time {last_valid_time}")]
    BlowUp { step: usize, last_valid_time: f64 },
    #[error("iteration did not converge: {0}")]
    NoConvergence(String),
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
}

pub type Result<T> = std::result::Result<T, Error>;
