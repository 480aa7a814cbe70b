use thiserror::Error;

/// Errors raised by the linear algebra kernels, the preconditioners and the solvers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch in {context}: expected {expected}, found {found}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("invalid matrix: {0}")]
    InvalidMatrix(String),

    /// A Cholesky pivot fell below `breakdown_tol` times its diagonal entry:
    /// the columns fed to the factorization are numerically dependent.
    #[error("Cholesky breakdown at column {column}: pivot {pivot:e} below threshold {threshold:e}")]
    Breakdown {
        column: usize,
        pivot: f64,
        threshold: f64,
    },

    #[error("singular triangular factor at column {0}")]
    SingularFactor(usize),

    #[error("invalid partition: {0}")]
    InvalidPartition(String),

    #[error("preconditioner breakdown in block {block} at local row {row}: pivot {pivot:e}")]
    PreconditionerBreakdown { block: usize, row: usize, pivot: f64 },

    #[error("invalid solver configuration: {0}")]
    InvalidConfig(String),

    #[error("oracle size guard: {0}")]
    OracleGuard(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn check_dim(context: &'static str, expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch {
            context,
            expected,
            found,
        })
    }
}
