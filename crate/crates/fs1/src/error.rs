//! Crate-wide error type.

use thiserror::Error;

/// Convenience alias used throughout the crate.
pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Everything that can go wrong while validating inputs, applying kernels,
/// or running the scaling iteration.
#[derive(Debug, Error)]
pub enum Error {
    /// A measure weight is negative.
    #[error("weight at index {index} is negative ({value})")]
    NegativeWeight { index: usize, value: f64 },

    /// Measure weights do not sum to one within the validation tolerance.
    #[error("weights sum to {sum} (must be 1 within {tol})")]
    MassNotOne { sum: f64, tol: f64 },

    /// A vector length does not match the grid it is paired with.
    #[error("length {got} does not match expected size {expected}")]
    LengthMismatch { expected: usize, got: usize },

    /// Two measures that must share a grid do not.
    #[error("measures live on different grids")]
    GridMismatch,

    /// The solver requires strictly positive weights.
    #[error("weight at index {index} is not strictly positive")]
    NonPositiveInput { index: usize },

    /// An input vector contains NaN or infinity.
    #[error("input contains a non-finite value")]
    NonFiniteInput,

    /// An iteration or evaluation produced NaN or infinity.
    #[error("computation produced a non-finite value")]
    NonFiniteResult,

    /// Regularization strength must be positive.
    #[error("epsilon must be positive, got {0}")]
    NonPositiveEpsilon(f64),

    /// Kernel decay factor must lie in [0, 1].
    #[error("lambda must lie in [0, 1], got {0}")]
    LambdaOutOfRange(f64),

    /// A plan entry was requested outside the coupled index range.
    #[error("entry ({i}, {j}) out of range for a {size}x{size} plan")]
    IndexOutOfRange { i: usize, j: usize, size: usize },

    /// A dense operation was asked to exceed its size cap.
    #[error("problem size {size} exceeds cap {cap}")]
    TooLarge { size: usize, cap: usize },

    /// Two measures that must carry equal total mass do not.
    #[error("total masses differ: {left} vs {right}")]
    MassMismatch { left: f64, right: f64 },

    /// A signal to normalize is identically zero.
    #[error("signal is identically zero")]
    ZeroSignal,

    /// A scalar parameter violates its documented range.
    #[error("invalid parameter: {0}")]
    InvalidParameter(&'static str),

    /// File could not be read.
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    /// File contents could not be parsed.
    #[error("parse error in {path}: {msg}")]
    ParseError { path: String, msg: String },

    /// File format is not one of the supported kinds.
    #[error("unsupported format: {0}")]
    UnsupportedFormat(String),
}
