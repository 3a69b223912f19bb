use crate::error::{Result, TrajectoryError};
use qtherm_core::{hermiticity_residual, relative_entropy, tol, CMatrix, DensityOperator, C64};

/// `S(ρ + ε δ ‖ ρ) / ε²` for each `ε`; the ratios approach a finite
/// constant as `ε → 0`.
pub fn perturbative_relative_entropy_check(rho: &DensityOperator, delta: &CMatrix, eps: &[f64]) -> Result<Vec<f64>> {
    let residual = hermiticity_residual(delta).max(delta.trace().norm());
    if residual > tol::HERM {
        return Err(TrajectoryError::InvalidPerturbation(residual));
    }
    eps.iter()
        .map(|&e| {
            let m = rho.matrix() + delta * C64::new(e, 0.0);
            let shifted =
                DensityOperator::new(m, rho.dims().to_vec()).map_err(|_| TrajectoryError::PerturbationNotPositive(e))?;
            Ok(relative_entropy(&shifted, rho)? / (e * e))
        })
        .collect()
}
