use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid graph: {0}")]
    InvalidGraph(String),

    #[error("graph is disconnected")]
    Disconnected,

    #[error("graph has {edges} edges, above the enumeration limit of {limit}; use a sampling method instead")]
    EnumerationLimit { edges: usize, limit: usize },

    #[error("matrix is not symmetric: |M[{row}][{col}] - M[{col}][{row}]| = {defect:e}")]
    NotSymmetric { row: usize, col: usize, defect: f64 },

    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },

    #[error("variance must be non-negative, got {0}")]
    NegativeVariance(f64),

    #[error("non-finite value: {0}")]
    NonFinite(f64),

    #[error("dimension mismatch for {what}: expected {expected}, got {got}")]
    Dimension {
        what: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("invalid parameter: {0}")]
    Parameter(String),
}
