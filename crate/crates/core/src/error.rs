use thiserror::Error;

/// Errors produced while reading inputs, building problems, or solving them.
#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("matrix is not symmetric at ({row}, {col}): {upper} vs {lower}")]
    Symmetry {
        row: usize,
        col: usize,
        upper: f64,
        lower: f64,
    },

    #[error("invalid value: {0}")]
    Domain(String),

    #[error("invalid problem: {0}")]
    Specification(String),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("non-positive pivot {pivot:e} at column {column} during Cholesky factorization")]
    NumericalBreakdown { column: usize, pivot: f64 },

    #[error("conjugate gradients stopped after {iterations} iterations with relative residual {residual:e}")]
    IterativeSolver { iterations: usize, residual: f64 },

    #[error("iterate became non-finite at iteration {0}")]
    Divergence(usize),

    #[error("invalid solver configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
