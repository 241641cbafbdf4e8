//! Error type shared across the library.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, TensorError>;

#[derive(Debug, Error)]
pub enum TensorError {
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("mode {mode} out of range for order-{order} tensor")]
    ModeOutOfRange { mode: usize, order: usize },

    #[error("duplicate mode {0} in factor chain")]
    DuplicateMode(usize),

    #[error("non-finite entry at index {0}")]
    NonFiniteEntry(usize),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("singular values not sorted in non-increasing order")]
    UnsortedSingularValues,

    #[error("SVD failed to converge for a {rows}x{cols} matrix")]
    SvdFailed { rows: usize, cols: usize },

    #[error("rank {rank} out of range 1..={max}")]
    RankOutOfRange { rank: usize, max: usize },

    #[error("result would have {elems} elements, above the cap of {cap}")]
    SizeCapExceeded { elems: usize, cap: usize },

    #[error("input tensor has zero Frobenius norm")]
    ZeroNorm,

    #[error("initial guess is infeasible: rel_error {rel_error:.6e} > tolerance {epsilon:.6e}")]
    InfeasibleInit { rel_error: f64, epsilon: f64 },

    #[error("adaptive rank budget infeasible at mode {mode}: current iterate violates the tolerance")]
    InfeasibleBudget { mode: usize },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("bad tensor file: {0}")]
    BadFile(String),
}
