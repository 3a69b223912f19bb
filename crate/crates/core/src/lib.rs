//! Dense complex linear algebra and quantum-information primitives.
//!
//! Operators are `nalgebra` matrices of `Complex64`. Bipartite spaces use
//! the Kronecker convention with the system factor first, so the joint index
//! of `(n, nu)` is `n * dim_e + nu`.

#![forbid(unsafe_code)]

pub mod entropy;
pub mod error;
pub mod linalg;
pub mod ops;
pub mod protocol;
pub mod state;
pub mod tol;

pub use entropy::{
    mutual_information, relative_entropy, shannon_entropy, trace_distance, von_neumann_entropy,
};
pub use error::{CoreError, Result};
pub use linalg::{
    adjoint, commutator, eig_hermitian, expm_hermitian, frobenius, hermitian_function,
    hermiticity_residual, is_hermitian, log_hermitian, max_abs, tensor, unitarity_residual,
    HermitianEigen,
};
pub use protocol::{time_ordered_unitary, time_reverse, Protocol, TimeReversal};
pub use state::{partial_trace, DensityOperator, ProjectiveBasis};

pub use nalgebra::{DMatrix, DVector};
pub use num_complex::Complex64;

/// Complex scalar.
pub type C64 = Complex64;
/// Dense complex matrix.
pub type CMatrix = DMatrix<C64>;
/// Dense complex column vector.
pub type CVector = DVector<C64>;

/// Shorthand for a real-valued complex number.
#[inline]
pub fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}
