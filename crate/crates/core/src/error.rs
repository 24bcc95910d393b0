use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("matrix is empty")]
    Empty,
    #[error("row {row} has {len} entries, expected {expected}")]
    NotSquare { row: usize, len: usize, expected: usize },
    #[error("matrix is not symmetric: entry ({row},{col}) differs from ({col},{row})")]
    NotSymmetric { row: usize, col: usize },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("matrix is singular")]
    SingularMatrix,
    #[error("division by zero")]
    DivisionByZero,
    #[error("matrix is not strictly positive definite (leading minor {minor} is not positive)")]
    NotPositiveDefinite { minor: usize },
    #[error("matrix is reducible")]
    NotIrreducible,
    #[error("matrix is not an M-matrix")]
    NotMMatrix,
    #[error("matrix has a non-positive entry at ({row},{col})")]
    NotEntrywisePositive { row: usize, col: usize },
    #[error("internal assertion violated: {0}")]
    AssertionViolation(String),
    #[error("expansion needs {required} enumerated sequences, budget is {budget}")]
    OrderTooLarge { required: u128, budget: u128 },
    #[error("oracle enumeration needs {required} sequences, budget is {budget}")]
    BudgetExceeded { required: u128, budget: u128 },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
