//! Two qubits with equal gap `ε` coupled by a CNOT, the system as control.

use crate::error::{invalid, ModelError, Result};
use qtherm_core::ops::{cnot, identity, ketbra, sigma_x};
use qtherm_core::{c, partial_trace, tensor, trace_distance, CMatrix, CVector, DensityOperator, ProjectiveBasis, Protocol};
use qtherm_trajectories::{BackwardInit, BipartiteProcess, Part};

/// Residual correlation tolerated after the second gate.
pub const TOL_DECORRELATION: f64 = 1e-10;

#[derive(Debug, Clone)]
pub struct CnotParams {
    /// Coherence of `ρ_S = (I + α σ_x)/2`.
    pub alpha: f64,
    /// `βε`; `+∞` gives a pure environment.
    pub beta_eps: f64,
    /// Level spacing `ε` of both qubits.
    pub epsilon: f64,
    /// Initial system basis; required when `α = 0`.
    pub initial_system: Option<ProjectiveBasis>,
    pub final_system: ProjectiveBasis,
    pub final_environment: ProjectiveBasis,
    pub backward_init: BackwardInit,
}

impl CnotParams {
    /// Energy-basis final measurements, non-inclusive backward state.
    pub fn new(alpha: f64, beta_eps: f64) -> Self {
        Self {
            alpha,
            beta_eps,
            epsilon: 1.0,
            initial_system: None,
            final_system: ProjectiveBasis::computational(2),
            final_environment: ProjectiveBasis::computational(2),
            backward_init: BackwardInit::Product,
        }
    }

    pub fn with_epsilon(mut self, epsilon: f64) -> Self {
        self.epsilon = epsilon;
        self
    }

    pub fn with_final_bases(mut self, system: ProjectiveBasis, environment: ProjectiveBasis) -> Self {
        self.final_system = system;
        self.final_environment = environment;
        self
    }

    pub fn with_initial_basis(mut self, basis: ProjectiveBasis) -> Self {
        self.initial_system = Some(basis);
        self
    }

    pub fn with_backward_init(mut self, init: BackwardInit) -> Self {
        self.backward_init = init;
        self
    }

    /// `κ = tanh(βε/2)`.
    pub fn kappa(&self) -> f64 {
        (self.beta_eps / 2.0).tanh()
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(invalid("alpha", format!("{} is outside [0, 1]", self.alpha)));
        }
        if self.beta_eps.is_nan() || self.beta_eps < 0.0 {
            return Err(invalid("beta_eps", format!("{} is negative", self.beta_eps)));
        }
        if !(self.epsilon.is_finite() && self.epsilon > 0.0) {
            return Err(invalid("epsilon", format!("{} is not a positive gap", self.epsilon)));
        }
        for b in [&self.final_system, &self.final_environment] {
            if b.dim() != 2 || b.len() != 2 {
                return Err(invalid("final basis", "qubit bases need two vectors"));
            }
        }
        Ok(())
    }
}

/// `(|0> ± |1>)/√2`.
pub fn plus_minus_basis() -> ProjectiveBasis {
    let s = 0.5f64.sqrt();
    ProjectiveBasis::new(vec![
        CVector::from_vec(vec![c(s), c(s)]),
        CVector::from_vec(vec![c(s), c(-s)]),
    ])
    .expect("orthonormal")
}

/// `(1/Z, e^{-βε}/Z)` with `Z = 1 + e^{-βε}`.
pub fn thermal_weights(beta_eps: f64) -> [f64; 2] {
    let b = (-beta_eps).exp();
    [1.0 / (1.0 + b), b / (1.0 + b)]
}

pub fn system_state(alpha: f64) -> DensityOperator {
    DensityOperator::from_trusted((identity(2) + sigma_x() * c(alpha)) * c(0.5), vec![2])
}

pub fn environment_state(beta_eps: f64) -> DensityOperator {
    let [p0, p1] = thermal_weights(beta_eps);
    DensityOperator::from_trusted(ketbra(2, 0, 0) * c(p0) + ketbra(2, 1, 1) * c(p1), vec![2])
}

/// `H_S + H_E = ε(|1><1| ⊗ I + I ⊗ |1><1|)`.
pub fn total_hamiltonian(epsilon: f64) -> CMatrix {
    let n = ketbra(2, 1, 1) * c(epsilon);
    tensor(&n, &identity(2)) + tensor(&identity(2), &n)
}

pub fn build_cnot(p: &CnotParams) -> Result<BipartiteProcess> {
    p.validate()?;
    let basis = match (&p.initial_system, p.alpha > 0.0) {
        (Some(b), _) => b.clone(),
        (None, true) => plus_minus_basis(),
        (None, false) => return Err(ModelError::DegenerateBasis),
    };
    let s = Part::with_basis(system_state(p.alpha), basis, p.final_system.clone(), "system")?;
    let e = Part::with_basis(
        environment_state(p.beta_eps),
        ProjectiveBasis::computational(2),
        p.final_environment.clone(),
        "environment",
    )?;
    let protocol = Protocol::unitary(cnot())?;
    Ok(BipartiteProcess::new(s, e, protocol)?.with_backward_init(p.backward_init.clone()))
}

/// `ρ'_SE = U (ρ_S ⊗ ρ_E) U^dag`.
pub fn post_gate_state(p: &CnotParams) -> DensityOperator {
    let u = cnot();
    let rho = DensityOperator::product(&system_state(p.alpha), &environment_state(p.beta_eps));
    DensityOperator::from_trusted(&u * rho.matrix() * u.adjoint(), vec![2, 2])
}

/// `Tr[(H_S + H_E)(ρ'_SE - ρ_SE)]`.
pub fn first_gate_work(p: &CnotParams) -> f64 {
    let h = total_hamiltonian(p.epsilon);
    let rho = DensityOperator::product(&system_state(p.alpha), &environment_state(p.beta_eps));
    post_gate_state(p).expect(&h).re - rho.expect(&h).re
}

/// `ε(1/2 - e^{-βε}/Z_E)`.
pub fn work_closed_form(p: &CnotParams) -> f64 {
    p.epsilon * (0.5 - thermal_weights(p.beta_eps)[1])
}

/// `ρ*_SE`: `ρ'_SE` dephased in the final product basis.
pub fn measured_state(p: &CnotParams) -> DensityOperator {
    let after = post_gate_state(p);
    let mut out = CMatrix::zeros(4, 4);
    for i in 0..2 {
        for j in 0..2 {
            let proj = tensor(&p.final_system.projector(i), &p.final_environment.projector(j));
            out += &proj * after.matrix() * &proj;
        }
    }
    DensityOperator::from_trusted(out, vec![2, 2])
}

#[derive(Debug, Clone)]
pub struct SecondGate {
    /// `ρ''_SE = U ρ*_SE U^dag`.
    pub state: DensityOperator,
    /// `Tr[(H_S + H_E)(ρ*_SE - ρ''_SE)]`.
    pub work_extracted: f64,
    /// Trace distance from `ρ''_S ⊗ ρ_E`.
    pub correlation: f64,
}

/// Second CNOT on the measured state, extracting the work stored in the
/// classical correlations.
pub fn cnot_second_gate(p: &CnotParams, state_after_measurement: &DensityOperator) -> Result<SecondGate> {
    p.validate()?;
    if state_after_measurement.dim() != 4 {
        return Err(invalid("state", format!("dimension {} is not 4", state_after_measurement.dim())));
    }
    let u = cnot();
    let rho = state_after_measurement.matrix();
    let out = DensityOperator::from_trusted(&u * rho * u.adjoint(), vec![2, 2]);
    let h = total_hamiltonian(p.epsilon);
    let work_extracted = (rho * &h).trace().re - out.expect(&h).re;
    let product = tensor(partial_trace(&out, 0)?.matrix(), environment_state(p.beta_eps).matrix());
    let correlation = trace_distance(out.matrix(), &product)?;
    if correlation > TOL_DECORRELATION {
        return Err(ModelError::NotDecorrelated(correlation));
    }
    Ok(SecondGate {
        state: out,
        work_extracted,
        correlation,
    })
}
