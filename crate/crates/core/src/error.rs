use thiserror::Error;

/// Errors raised by the linear-algebra and state primitives.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum CoreError {
    #[error("matrix is not square: {0}x{1}")]
    NotSquare(usize, usize),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("not Hermitian (violation {0:e})")]
    NotHermitian(f64),

    #[error("trace is not 1 (got {0})")]
    InvalidTrace(f64),

    #[error("not positive semidefinite (min eigenvalue {0:e})")]
    NotPsd(f64),

    #[error("subsystem index {index} out of range for {count} factors")]
    SubsystemOutOfRange { index: usize, count: usize },

    #[error("state has a single factor; a bipartite split is required")]
    NotBipartite,

    #[error("basis vectors are not orthonormal (residual {0:e})")]
    NotOrthonormal(f64),

    #[error("support of rho is not contained in support of sigma (weight {0:e})")]
    SupportViolation(f64),

    #[error("unitarity violated (residual {0:e})")]
    NotUnitary(f64),

    #[error("protocol needs at least one slice")]
    NoSlices,

    #[error("non-finite matrix entry")]
    NonFinite,
}

pub type Result<T> = std::result::Result<T, CoreError>;
