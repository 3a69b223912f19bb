use crate::error::{LindbladError, Result};
use crate::integrate::liouvillian_apply_matrix;
use crate::model::LindbladModel;
use qtherm_channels::NonequilibriumPotential;
use qtherm_core::{eig_hermitian, relative_entropy, tol, CMatrix, DensityOperator};

/// Entropy-production rates at one instant (nats per unit time).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RatesSample {
    pub t: f64,
    /// `-Tr[ρ̇ ln ρ]`.
    pub s_dot: f64,
    /// `Tr[ρ̇ Φ]`.
    pub phi_dot: f64,
    /// `Σ_k Tr[L_k ρ L_k^dag] σ^E_k`.
    pub sigma_e_dot: f64,
    pub s_dot_i: f64,
    pub s_dot_a: f64,
    pub s_dot_na: f64,
    /// Largest over smallest eigenvalue of `ρ` after clamping.
    pub conditioning: f64,
}

impl RatesSample {
    /// `[t, Ṡ, φ̇, ⟨σ̇^E⟩, Ṡ_i, Ṡ_a, Ṡ_na]`.
    pub fn row(&self) -> [f64; 7] {
        [self.t, self.s_dot, self.phi_dot, self.sigma_e_dot, self.s_dot_i, self.s_dot_a, self.s_dot_na]
    }
}

/// `⟨σ̇^E⟩`.
pub fn environment_entropy_rate(m: &LindbladModel, rho: &CMatrix) -> Result<f64> {
    let sigma = m.sigma_e()?;
    // jump operators do not depend on time
    let g = m.generator(0.0);
    Ok(g.jumps
        .iter()
        .zip(m.jumps())
        .zip(sigma)
        .map(|((op, j), s)| {
            // Tr[L ρ L^dag] = Σ_ij (L ρ)_ij conj(L_ij)
            let lr = op.mul(rho);
            lr.iter().zip(j.matrix.iter()).map(|(x, l)| (x * l.conj()).re).sum::<f64>() * s
        })
        .sum())
}

/// Rates with a caller-supplied potential.
pub fn entropy_rates_with(
    m: &LindbladModel,
    rho: &DensityOperator,
    t: f64,
    phi: &NonequilibriumPotential,
) -> Result<RatesSample> {
    if rho.dim() != m.dim() {
        return Err(LindbladError::DimensionMismatch {
            expected: m.dim(),
            got: rho.dim(),
        });
    }
    let rho_dot = liouvillian_apply_matrix(m, rho.matrix(), t);
    let eig = eig_hermitian(rho.matrix())?;
    let clamped: Vec<f64> = eig.values.iter().map(|v| v.max(tol::LOG_CLAMP)).collect();
    let max = clamped.iter().cloned().fold(0.0, f64::max);
    let min = clamped.iter().cloned().fold(f64::INFINITY, f64::min);
    let s_dot = -(0..eig.dim())
        .map(|i| {
            let v = eig.vector(i);
            (v.adjoint() * &rho_dot * &v)[(0, 0)].re * clamped[i].ln()
        })
        .sum::<f64>();
    let phi_dot = phi.expect(&rho_dot);
    let sigma_e_dot = environment_entropy_rate(m, rho.matrix())?;
    Ok(RatesSample {
        t,
        s_dot,
        phi_dot,
        sigma_e_dot,
        s_dot_i: s_dot + sigma_e_dot,
        s_dot_a: sigma_e_dot + phi_dot,
        s_dot_na: s_dot - phi_dot,
        conditioning: max / min,
    })
}

/// `Ṡ`, `φ̇`, `⟨σ̇^E⟩` and the total, adiabatic and non-adiabatic rates.
pub fn entropy_rates(m: &LindbladModel, rho: &DensityOperator, t: f64) -> Result<RatesSample> {
    let phi = m.potential(t)?;
    entropy_rates_with(m, rho, t, &phi)
}

/// `S(ρ_0‖π) - S(ρ_t‖π)` for relaxation toward a fixed `π`.
pub fn spohn_relaxation(rho0: &DensityOperator, rho_t: &DensityOperator, pi: &DensityOperator) -> Result<f64> {
    let a = relative_entropy(rho0, pi).map_err(support)?;
    let b = relative_entropy(rho_t, pi).map_err(support)?;
    Ok(a - b)
}

fn support(e: qtherm_core::CoreError) -> LindbladError {
    match e {
        qtherm_core::CoreError::SupportViolation(w) => LindbladError::SupportViolation(w),
        other => other.into(),
    }
}
