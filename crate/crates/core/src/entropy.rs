//! Entropies in nats, with `0 ln 0 = 0`.

use crate::error::{CoreError, Result};
use crate::linalg::eig_hermitian;
use crate::state::{partial_trace, DensityOperator};
use crate::{tol, CMatrix};

/// `-sum p ln p` over a probability vector.
pub fn shannon_entropy(p: &[f64]) -> f64 {
    p.iter().filter(|&&x| x > 0.0).map(|&x| -x * x.ln()).sum()
}

fn clamped_spectrum(rho: &CMatrix) -> Result<Vec<f64>> {
    let eig = eig_hermitian(rho)?;
    if let Some(&min) = eig.values.first() {
        if min < -tol::PSD {
            return Err(CoreError::NotPsd(min));
        }
    }
    Ok(eig.values.iter().map(|&l| l.max(0.0)).collect())
}

/// `S(rho) = -Tr[rho ln rho]`.
pub fn von_neumann_entropy(rho: &DensityOperator) -> Result<f64> {
    Ok(shannon_entropy(&clamped_spectrum(rho.matrix())?).max(0.0))
}

/// `S(rho||sigma) = Tr[rho (ln rho - ln sigma)]`.
///
/// Fails with `SupportViolation` when rho puts weight above `tol::SUPPORT`
/// outside the support of sigma.
pub fn relative_entropy(rho: &DensityOperator, sigma: &DensityOperator) -> Result<f64> {
    if rho.dim() != sigma.dim() {
        return Err(CoreError::DimensionMismatch {
            expected: sigma.dim(),
            got: rho.dim(),
        });
    }
    let s_rho = -von_neumann_entropy(rho)?;
    let es = eig_hermitian(sigma.matrix())?;
    if let Some(&min) = es.values.first() {
        if min < -tol::PSD {
            return Err(CoreError::NotPsd(min));
        }
    }
    let mut cross = 0.0;
    let mut outside = 0.0;
    for (j, &l) in es.values.iter().enumerate() {
        let w = rho.weight(&es.vector(j));
        if l <= tol::SUPPORT_FLOOR {
            outside += w.max(0.0);
        } else {
            cross += w * l.ln();
        }
    }
    if outside > tol::SUPPORT {
        return Err(CoreError::SupportViolation(outside));
    }
    Ok((s_rho - cross).max(0.0))
}

/// `I(rho) = S(rho_S) + S(rho_E) - S(rho)` for a two-factor state.
pub fn mutual_information(rho: &DensityOperator) -> Result<f64> {
    if rho.dims().len() != 2 {
        return Err(CoreError::NotBipartite);
    }
    let s = von_neumann_entropy(&partial_trace(rho, 0)?)?;
    let e = von_neumann_entropy(&partial_trace(rho, 1)?)?;
    Ok((s + e - von_neumann_entropy(rho)?).max(0.0))
}

/// `(1/2) ||a - b||_1`.
pub fn trace_distance(a: &CMatrix, b: &CMatrix) -> Result<f64> {
    let eig = eig_hermitian(&(a - b))?;
    Ok(0.5 * eig.values.iter().map(|l| l.abs()).sum::<f64>())
}
