//! Numerical tolerances shared across the workspace.

/// Hermiticity check on density operators and Hamiltonians.
pub const HERM: f64 = 1e-10;
/// Unit-trace check.
pub const TRACE: f64 = 1e-10;
/// Most negative eigenvalue accepted as zero.
pub const PSD: f64 = 1e-10;
/// Adjacent eigenvalues closer than this are reported as degenerate.
pub const DEGEN: f64 = 1e-9;
/// Unitarity residual `max |U^dag U - I|`.
pub const UNIT: f64 = 1e-9;
/// Orthonormality of measurement bases.
pub const BASIS: f64 = 1e-10;
/// Weight of rho outside the support of sigma tolerated in relative entropy.
pub const SUPPORT: f64 = 1e-12;
/// Eigenvalues of sigma at or below this are treated as outside its support.
pub const SUPPORT_FLOOR: f64 = 1e-14;
/// Floor applied to eigenvalues before a logarithm in rate formulas.
pub const LOG_CLAMP: f64 = 1e-14;
/// Consistency of entropy identities.
pub const CONS: f64 = 1e-10;
