//! Resonantly driven, lossy cavity mode in the interaction picture with
//! respect to `H_0 = ħω a^dag a`, with `ħ = 1`.

use crate::error::{invalid, ModelError, Result};
use qtherm_channels::NonequilibriumPotential;
use qtherm_core::ops::{annihilation, number};
use qtherm_core::{c, expm_hermitian, CMatrix, DensityOperator, ProjectiveBasis, C64};
use qtherm_lindblad::{
    assign_environment_entropies, entropy_rates_with, environment_entropy_rate, liouvillian_apply_matrix,
    InvariantSupplier, JumpOperator, LindbladModel, RatesSample, Rk4,
};

/// Population allowed in the top levels of the truncated Fock space.
pub const LEAKAGE_TOL: f64 = 1e-8;
/// Levels below `n_max` counted as the truncation edge.
pub const EDGE_LEVELS: usize = 5;
/// Fock levels above `n_max` used as reference when measuring truncation
/// effects on the displacement operator.
const PADDING: usize = 60;
/// Off-diagonal size tolerated by the closed-form transient branch.
const DIAGONAL_TOL: f64 = 1e-12;

/// Down and up jump indices.
pub const EMISSION: usize = 0;
pub const ABSORPTION: usize = 1;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CavityParams {
    pub omega: f64,
    /// Drive amplitude `ε = |ε| e^{iφ}`.
    pub epsilon: C64,
    pub gamma0: f64,
    pub beta: f64,
    /// Highest Fock level kept.
    pub n_max: usize,
}

impl CavityParams {
    pub fn new(omega: f64, epsilon: C64, gamma0: f64, beta: f64, n_max: usize) -> Result<Self> {
        let p = Self {
            omega,
            epsilon,
            gamma0,
            beta,
            n_max,
        };
        p.validate()?;
        Ok(p)
    }

    /// `ω = 1`, `ε = 0.02`, `γ_0 = 0.01`, `kT = 10` (so `α = 4`), levels up to 320.
    pub fn resonant_drive() -> Self {
        Self {
            omega: 1.0,
            epsilon: C64::new(0.02, 0.0),
            gamma0: 0.01,
            beta: 0.1,
            n_max: 320,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |x: f64| x.is_finite() && x > 0.0;
        if !positive(self.omega) {
            return Err(invalid("omega", format!("{} must be positive", self.omega)));
        }
        if !positive(self.gamma0) {
            return Err(invalid("gamma0", format!("{} must be positive", self.gamma0)));
        }
        if !positive(self.beta) {
            return Err(invalid("beta", format!("{} must be positive", self.beta)));
        }
        if !(self.epsilon.re.is_finite() && self.epsilon.im.is_finite()) {
            return Err(invalid("epsilon", "must be finite"));
        }
        if self.n_max < EDGE_LEVELS + 1 {
            return Err(invalid("n_max", format!("{} leaves no room below the edge", self.n_max)));
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.n_max + 1
    }

    /// `α = 2ε/γ_0`.
    pub fn alpha(&self) -> C64 {
        self.epsilon * (2.0 / self.gamma0)
    }

    /// Drive phase `φ`.
    pub fn phase(&self) -> f64 {
        self.epsilon.arg()
    }

    /// `n^th = 1/(e^{βω} - 1)`.
    pub fn occupation(&self) -> f64 {
        1.0 / (self.beta * self.omega).exp_m1()
    }

    /// `(Γ↓, Γ↑) = (γ_0(n^th + 1), γ_0 n^th)`.
    pub fn rates(&self) -> (f64, f64) {
        let n = self.occupation();
        (self.gamma0 * (n + 1.0), self.gamma0 * n)
    }

    /// `γ_0, |ε| ≤ ω/10`.
    pub fn is_weak_driving(&self) -> bool {
        self.gamma0 <= 0.1 * self.omega && self.epsilon.norm() <= 0.1 * self.omega
    }

    /// `4|α|² + 10`.
    pub fn recommended_n_max(&self) -> usize {
        (4.0 * self.alpha().norm_sqr()).ceil() as usize + 10
    }

    /// `Ẇ_ss = ħω γ_0 |α|²`.
    pub fn steady_power(&self) -> f64 {
        self.omega * self.gamma0 * self.alpha().norm_sqr()
    }

    /// `U_ss = ħω (n^th + |α|²)`.
    pub fn steady_energy(&self) -> f64 {
        self.omega * (self.occupation() + self.alpha().norm_sqr())
    }
}

/// `t_n = 2 ln 2 / γ_0`.
pub fn adiabatic_sign_change_time(gamma0: f64) -> f64 {
    2.0 * std::f64::consts::LN_2 / gamma0
}

/// `exp(α a^dag - α* a)` on `d` Fock levels.
pub fn displacement(alpha: C64, d: usize) -> Result<CMatrix> {
    let a = annihilation(d);
    let g = a.adjoint() * alpha - &a * alpha.conj();
    // exp(G) = exp(-i h) with h = iG Hermitian
    Ok(expm_hermitian(&(g * C64::new(0.0, 1.0)), 1.0)?)
}

/// Gibbs weights `e^{-βωn}/Z_0` on `d` levels.
pub fn thermal_weights(beta_omega: f64, d: usize) -> Vec<f64> {
    let w: Vec<f64> = (0..d).map(|n| (-beta_omega * n as f64).exp()).collect();
    let z: f64 = w.iter().sum();
    w.into_iter().map(|x| x / z).collect()
}

pub fn gibbs_state(p: &CavityParams) -> DensityOperator {
    DensityOperator::diagonal(&thermal_weights(p.beta * p.omega, p.dim())).expect("normalized weights")
}

/// `V = iħ(ε a^dag - ε* a)`.
pub fn drive_hamiltonian(p: &CavityParams) -> CMatrix {
    let a = annihilation(p.dim());
    (a.adjoint() * p.epsilon - &a * p.epsilon.conj()) * C64::new(0.0, 1.0)
}

/// Displaced thermal state with its potential and truncation diagnostics.
#[derive(Debug, Clone)]
pub struct CavitySteadyState {
    /// `π = D(α) e^{-βH_0}/Z_0 D^dag(α)` within the truncation.
    pub state: DensityOperator,
    /// `Φ = β D(α) H_0 D^dag(α) + ln Z_0`.
    pub potential: NonequilibriumPotential,
    /// Population at levels `n ≥ n_max - 5` of the untruncated state.
    pub leakage: f64,
    /// Weighted deviation of the truncated displacement from a larger-space
    /// reference.
    pub displacement_error: f64,
}

pub fn cavity_steady_state(p: &CavityParams) -> Result<CavitySteadyState> {
    p.validate()?;
    let d = p.dim();
    let alpha = p.alpha();
    let bw = p.beta * p.omega;
    let weights = thermal_weights(bw, d);

    let big = d + PADDING;
    let d_big = displacement(alpha, big)?;
    let w_big = thermal_weights(bw, big);
    let edge = p.n_max - EDGE_LEVELS;
    let mut leakage = 0.0;
    for n in edge..big {
        leakage += (0..big).map(|k| d_big[(n, k)].norm_sqr() * w_big[k]).sum::<f64>();
    }
    if leakage > LEAKAGE_TOL {
        return Err(ModelError::Truncation { level: edge, leakage });
    }

    let d_t = displacement(alpha, d)?;
    let mut err = 0.0;
    for k in 0..d {
        let col: f64 = (0..d).map(|n| (d_t[(n, k)] - d_big[(n, k)]).norm_sqr()).sum();
        err += col * weights[k];
    }

    let ln_z = (0..d).map(|n| (-bw * n as f64).exp()).sum::<f64>().ln();
    let phi = (0..d).map(|n| bw * n as f64 + ln_z).collect();
    let potential = NonequilibriumPotential::from_spectrum(phi, ProjectiveBasis::from_orthonormal_columns(&d_t))?;
    Ok(CavitySteadyState {
        state: potential.state(),
        potential,
        leakage,
        displacement_error: err.sqrt(),
    })
}

/// `dρ/dt = -i[V, ρ] + Γ↓ D[a]ρ + Γ↑ D[a^dag]ρ` with the displaced thermal
/// invariant state attached.
pub fn build_cavity(p: &CavityParams) -> Result<LindbladModel> {
    let ss = cavity_steady_state(p)?;
    let (down, up) = p.rates();
    let a = annihilation(p.dim());
    let jumps = vec![
        JumpOperator::new(&a * c(down.sqrt())),
        JumpOperator::new(a.adjoint() * c(up.sqrt())),
    ];
    let m = LindbladModel::new(drive_hamiltonian(p), jumps)?;
    Ok(assign_environment_entropies(&m)?.with_invariant(InvariantSupplier::Constant(ss.potential)))
}

/// Energy bookkeeping at one instant; `Q̇` is the energy exchanged with the
/// bath, `Tr[H_0 L(ρ)]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyRates {
    pub w_dot: f64,
    pub q_dot: f64,
    /// `Tr[H_0 ρ̇]`.
    pub u_dot: f64,
    /// `Tr[x_φ ρ̇]` with `x_φ = a^dag e^{iφ} + a e^{-iφ}`.
    pub x_dot: f64,
    /// `Tr[V L(ρ)]`.
    pub drive_dissipation: f64,
}

/// Precomputed observables of one cavity model.
#[derive(Debug, Clone)]
pub struct CavityObservables {
    pub h0: CMatrix,
    /// `ħω (ε a^dag + ε* a)`.
    pub power: CMatrix,
    pub quadrature: CMatrix,
    /// `L^dag(H_0)`, so that `Q̇ = Tr[ρ L^dag(H_0)]`.
    pub heat: CMatrix,
    /// `L^dag(V)`.
    pub drive_heat: CMatrix,
    /// `Φ` of the displaced thermal state.
    pub potential: CMatrix,
}

fn adjoint_dissipator(m: &LindbladModel, x: &CMatrix) -> CMatrix {
    let d = m.dim();
    let mut out = CMatrix::zeros(d, d);
    for j in m.jumps() {
        let l = &j.matrix;
        let ll = l.adjoint() * l;
        out += l.adjoint() * x * l - (&ll * x + x * &ll) * c(0.5);
    }
    out
}

/// `Re Tr[A B]`.
pub(crate) fn trace_product(a: &CMatrix, b: &CMatrix) -> f64 {
    a.iter().zip(b.transpose().iter()).map(|(x, y)| (x * y).re).sum()
}

impl CavityObservables {
    pub fn new(p: &CavityParams, m: &LindbladModel) -> Result<Self> {
        let d = p.dim();
        let a = annihilation(d);
        let e_phi = C64::from_polar(1.0, p.phase());
        let h0 = number(d) * c(p.omega);
        let v = drive_hamiltonian(p);
        Ok(Self {
            power: (a.adjoint() * p.epsilon + &a * p.epsilon.conj()) * c(p.omega),
            quadrature: a.adjoint() * e_phi + &a * e_phi.conj(),
            heat: adjoint_dissipator(m, &h0),
            drive_heat: adjoint_dissipator(m, &v),
            potential: m.potential(0.0)?.matrix(),
            h0,
        })
    }

    /// `Ṡ_a = ⟨σ̇^E⟩ + Tr[ρ̇ Φ]`.
    pub fn adiabatic_rate(&self, m: &LindbladModel, rho: &CMatrix, rho_dot: &CMatrix) -> Result<f64> {
        Ok(environment_entropy_rate(m, rho)? + trace_product(&self.potential, rho_dot))
    }

    pub fn rates(&self, rho: &CMatrix, rho_dot: &CMatrix) -> EnergyRates {
        EnergyRates {
            w_dot: trace_product(&self.power, rho),
            q_dot: trace_product(&self.heat, rho),
            u_dot: trace_product(&self.h0, rho_dot),
            x_dot: trace_product(&self.quadrature, rho_dot),
            drive_dissipation: trace_product(&self.drive_heat, rho),
        }
    }
}

/// Closed-form thermodynamics for a start diagonal in the number basis.
/// Entropy rates other than `Ṡ_a` are known only for the Gibbs start, where
/// `Ṡ = 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CavityTransients {
    pub energy: EnergyRates,
    pub s_dot_a: f64,
    pub s_dot: Option<f64>,
    pub s_dot_na: Option<f64>,
    pub s_dot_i: Option<f64>,
}

/// Closed forms with `⟨a⟩_0 = 0` and `n_0 = ⟨a^dag a⟩_0`:
/// `⟨a⟩_t = α(1 - e^{-γ_0 t/2})`,
/// `⟨a^dag a⟩_t = n^th + (n_0 - n^th) e^{-γ_0 t} + |α|²(1 - e^{-γ_0 t/2})²`.
pub fn cavity_transients(p: &CavityParams, rho0: &DensityOperator, t: f64) -> Result<CavityTransients> {
    p.validate()?;
    if rho0.dim() != p.dim() {
        return Err(invalid("rho0", format!("dimension {} is not {}", rho0.dim(), p.dim())));
    }
    let m = rho0.matrix();
    let off = (0..m.nrows())
        .flat_map(|i| (0..m.ncols()).filter(move |&j| j != i).map(move |j| (i, j)))
        .map(|(i, j)| m[(i, j)].norm())
        .fold(0.0, f64::max);
    if off > DIAGONAL_TOL {
        return Err(ModelError::BranchMismatch(off));
    }
    let pops = rho0.populations();
    let n0: f64 = pops.iter().enumerate().map(|(n, w)| n as f64 * w).sum();
    let gibbs = thermal_weights(p.beta * p.omega, p.dim());
    let is_gibbs = pops.iter().zip(&gibbs).all(|(a, b)| (a - b).abs() <= DIAGONAL_TOL);

    let g = p.gamma0;
    let e = (-g * t / 2.0).exp();
    let abs_alpha = p.alpha().norm();
    let nth = p.occupation();
    let w_ss = p.steady_power();
    let w_dot = w_ss * (1.0 - e);
    let x_dot = g * abs_alpha * e;
    let q_dot = -g * p.omega * ((n0 - nth) * e * e + abs_alpha * abs_alpha * (1.0 - e) * (1.0 - e));
    let u_dot = w_dot + q_dot;
    let s_dot_a = p.beta * (w_dot - p.omega * abs_alpha * x_dot);
    let (s_dot, s_dot_na, s_dot_i) = if is_gibbs {
        (Some(0.0), Some(p.beta * (p.omega * abs_alpha * x_dot - u_dot)), Some(-p.beta * q_dot))
    } else {
        (None, None, None)
    };
    Ok(CavityTransients {
        energy: EnergyRates {
            w_dot,
            q_dot,
            u_dot,
            x_dot,
            drive_dissipation: 0.0,
        },
        s_dot_a,
        s_dot,
        s_dot_na,
        s_dot_i,
    })
}

/// Population at levels `n ≥ n_max - 5`.
pub fn edge_population(rho: &CMatrix) -> f64 {
    let d = rho.nrows();
    (d.saturating_sub(EDGE_LEVELS + 1)..d).map(|n| rho[(n, n)].re).sum()
}

/// One point of an integrated cavity transient.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CavitySample {
    pub t: f64,
    pub energy: EnergyRates,
    pub s_dot_a: f64,
    /// Full entropy rates, at every `full_every`-th step only.
    pub full: Option<RatesSample>,
    pub edge: f64,
}

/// RK4 solution from `rho0` with the rates recorded after every step.
pub fn cavity_series(
    p: &CavityParams,
    m: &LindbladModel,
    rho0: &DensityOperator,
    t_final: f64,
    dt: f64,
    full_every: usize,
) -> Result<Vec<CavitySample>> {
    if !(dt > 0.0 && t_final > 0.0) {
        return Err(invalid("dt", format!("step {dt} and horizon {t_final} must be positive")));
    }
    let obs = CavityObservables::new(p, m)?;
    let phi = m.potential(0.0)?;
    let steps = (t_final / dt).round() as usize;
    let mut rk = Rk4::new(m, rho0)?;
    let mut out = Vec::with_capacity(steps + 1);
    for n in 0..=steps {
        if n > 0 {
            rk.step(dt)?;
        }
        let rho = rk.matrix();
        let rho_dot = liouvillian_apply_matrix(m, rho, rk.time());
        let full = if full_every > 0 && n % full_every == 0 {
            Some(entropy_rates_with(m, &rk.state(), rk.time(), &phi)?)
        } else {
            None
        };
        out.push(CavitySample {
            t: rk.time(),
            energy: obs.rates(rho, &rho_dot),
            s_dot_a: obs.adiabatic_rate(m, rho, &rho_dot)?,
            full,
            edge: edge_population(rho),
        });
    }
    Ok(out)
}
