use thiserror::Error;

/// Errors raised by fiber construction, search and sampling.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("invalid {field}: {reason}")]
    InvalidDimension { field: &'static str, reason: String },

    #[error("length mismatch for {what}: expected {expected}, got {got}")]
    LengthMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("integer overflow while computing {0}")]
    Overflow(&'static str),

    #[error(
        "cell index {cell} out of range (next unfixed cell is {next}, table has {cells} cells)"
    )]
    CellOutOfRange {
        cell: usize,
        next: usize,
        cells: usize,
    },

    #[error("negative residual margin in row {row}")]
    NegativeResidual { row: usize },

    #[error("the fiber is empty")]
    EmptyFiber,

    #[error("search node budget of {budget} exceeded after {visited} nodes")]
    BudgetExceeded { budget: u64, visited: u64 },

    #[error("box holds {points} lattice points, limit is {limit}")]
    BoxTooLarge { points: u128, limit: u128 },

    #[error("parse error: {0}")]
    Parse(String),

    #[error("worker pool: {0}")]
    Pool(String),
}

pub type Result<T> = std::result::Result<T, Error>;
