//! Three-level absorption machine: levels `g, e_A, e_B`, each transition
//! coupled to its own thermal bath.

use crate::error::{invalid, ModelError, Result};
use qtherm_channels::{nonequilibrium_potential, KrausLabel, KrausMap, KrausOperator, NonequilibriumPotential};
use qtherm_core::ops::ketbra;
use qtherm_core::{c, CMatrix, DensityOperator, ProjectiveBasis, C64};
use qtherm_lindblad::{
    assign_environment_entropies, dissipator_apply, InvariantSupplier, JumpEvent, JumpOperator, JumpTrajectory,
    LindbladModel,
};
use rayon::prelude::*;

pub const GROUND: usize = 0;
pub const LEVEL_A: usize = 1;
pub const LEVEL_B: usize = 2;

/// Index of `L^(r)_↓ = √Γ↓ a_r` in the model's jump list.
pub fn down(r: usize) -> usize {
    2 * r
}

/// Index of `L^(r)_↑ = √Γ↑ a_r^dag`.
pub fn up(r: usize) -> usize {
    2 * r + 1
}

/// `(lower, upper)` level of transition `r`.
pub fn transition(r: usize) -> (usize, usize) {
    [(GROUND, LEVEL_A), (LEVEL_A, LEVEL_B), (GROUND, LEVEL_B)][r]
}

/// Gaps `ħω_1`, `ħω_2` (with `ħω_3 = ħω_1 + ħω_2`), bath inverse
/// temperatures and spontaneous decay rates, indexed by transition.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MachineParams {
    pub hw1: f64,
    pub hw2: f64,
    pub beta: [f64; 3],
    pub gamma: [f64; 3],
}

impl MachineParams {
    /// Requires `β_1 ≥ β_3 ≥ β_2`.
    pub fn new(hw1: f64, hw2: f64, beta: [f64; 3], gamma: [f64; 3]) -> Result<Self> {
        let p = Self::unordered(hw1, hw2, beta, gamma)?;
        if !(beta[0] >= beta[2] && beta[2] >= beta[1]) {
            return Err(invalid("beta", format!("{beta:?} violates beta1 >= beta3 >= beta2")));
        }
        Ok(p)
    }

    /// Any positive temperatures, as needed when sweeping `β_1` through the
    /// other two.
    pub fn unordered(hw1: f64, hw2: f64, beta: [f64; 3], gamma: [f64; 3]) -> Result<Self> {
        let positive = |x: f64| x.is_finite() && x > 0.0;
        if !positive(hw1) || !positive(hw2) {
            return Err(invalid("hw", format!("gaps {hw1}, {hw2} must be positive")));
        }
        if !beta.iter().all(|&b| positive(b)) {
            return Err(invalid("beta", format!("{beta:?} must be positive")));
        }
        if !gamma.iter().all(|&g| positive(g)) {
            return Err(invalid("gamma", format!("{gamma:?} must be positive")));
        }
        Ok(Self { hw1, hw2, beta, gamma })
    }

    /// `ħω_1 = 1`, `ħω_2 = 1.5`, `β_2 = 0.5`, `β_3 = 4`, equal rates `γ`.
    pub fn refrigerator(beta1: f64, gamma: f64) -> Result<Self> {
        Self::unordered(1.0, 1.5, [beta1, 0.5, 4.0], [gamma; 3])
    }

    pub fn with_beta1(mut self, beta1: f64) -> Result<Self> {
        self.beta[0] = beta1;
        Self::unordered(self.hw1, self.hw2, self.beta, self.gamma)
    }

    pub fn hw(&self) -> [f64; 3] {
        [self.hw1, self.hw2, self.hw1 + self.hw2]
    }

    pub fn is_ordered(&self) -> bool {
        self.beta[0] >= self.beta[2] && self.beta[2] >= self.beta[1]
    }

    /// Common `γ` when all three rates agree.
    pub fn equal_rate(&self) -> Option<f64> {
        let g = self.gamma[0];
        self.gamma.iter().all(|&x| x == g).then_some(g)
    }

    /// `n^th_r = 1/(e^{β_r ħω_r} - 1)`.
    pub fn occupations(&self) -> [f64; 3] {
        let hw = self.hw();
        std::array::from_fn(|r| 1.0 / (self.beta[r] * hw[r]).exp_m1())
    }

    /// `(Γ↓, Γ↑) = (γ(n^th + 1), γ n^th)` per transition.
    pub fn rates(&self) -> [(f64, f64); 3] {
        let n = self.occupations();
        std::array::from_fn(|r| (self.gamma[r] * (n[r] + 1.0), self.gamma[r] * n[r]))
    }

    /// `Δ = e^{β_3ħω_3} - e^{β_1ħω_1 + β_2ħω_2}`; positive in the
    /// refrigerator regime.
    pub fn delta(&self) -> f64 {
        let hw = self.hw();
        (self.beta[2] * hw[2]).exp() - (self.beta[0] * hw[0] + self.beta[1] * hw[1]).exp()
    }

    /// `β_1` at which all stationary flows vanish.
    pub fn crossing_beta1(&self) -> f64 {
        let hw = self.hw();
        (self.beta[2] * hw[2] - self.beta[1] * hw[1]) / hw[0]
    }

    /// Smallest `ħω_2` for refrigeration at the given temperatures.
    pub fn cooling_window_hw2(&self) -> f64 {
        self.hw1 * (self.beta[0] - self.beta[2]) / (self.beta[2] - self.beta[1])
    }

    /// `(β_3 - β_2)/(β_1 - β_3)`.
    pub fn carnot_efficiency(&self) -> f64 {
        (self.beta[2] - self.beta[1]) / (self.beta[0] - self.beta[2])
    }
}

/// `H_S = ħω_1 |e_A><e_A| + ħ(ω_1 + ω_2) |e_B><e_B|`.
pub fn machine_hamiltonian(p: &MachineParams) -> CMatrix {
    let hw = p.hw();
    ketbra(3, LEVEL_A, LEVEL_A) * c(hw[0]) + ketbra(3, LEVEL_B, LEVEL_B) * c(hw[2])
}

/// Lowering operator `a_r`.
pub fn lowering(r: usize) -> CMatrix {
    let (lo, hi) = transition(r);
    ketbra(3, lo, hi)
}

/// Master equation with the six jump operators ordered `↓1, ↑1, ↓2, ↑2,
/// ↓3, ↑3`, environment entropies from the pair rule and the stationary
/// state attached.
pub fn build_machine(p: &MachineParams) -> Result<LindbladModel> {
    let rates = p.rates();
    let mut jumps = Vec::with_capacity(6);
    for (r, &(gd, gu)) in rates.iter().enumerate() {
        let a = lowering(r);
        jumps.push(JumpOperator::new(&a * c(gd.sqrt())));
        jumps.push(JumpOperator::new(a.adjoint() * c(gu.sqrt())));
    }
    let m = assign_environment_entropies(&LindbladModel::new(machine_hamiltonian(p), jumps)?)?;
    let potential = match p.equal_rate() {
        Some(_) => populations_potential(&machine_steady_state(p)?)?,
        None => nonequilibrium_potential(&m.numeric_invariant(0.0)?)?,
    };
    Ok(m.with_invariant(InvariantSupplier::Constant(potential)))
}

/// One time step as an exactly complete Kraus map: `M_k = √dt L_k` and the
/// diagonal no-jump operator `e^{-iH dt} (I - dt K)^{1/2}`.
pub fn machine_step_map(m: &LindbladModel, dt: f64) -> Result<KrausMap> {
    let d = m.dim();
    let h = m.hamiltonian(0.0);
    let k = m.decay_operator(0.0);
    let mut m0 = CMatrix::zeros(d, d);
    for i in 0..d {
        let keep = 1.0 - dt * k[(i, i)].re;
        if !(dt > 0.0 && keep >= 0.0) {
            return Err(invalid("dt", format!("{dt} exceeds the inverse decay rate of level {i}")));
        }
        m0[(i, i)] = C64::from_polar(keep.sqrt(), -h[(i, i)].re * dt / m.hbar());
    }
    let mut ops = vec![KrausOperator::new(m0, KrausLabel::NoJump).with_sigma_e(0.0)];
    for (n, j) in m.jumps().iter().enumerate() {
        let mut op = KrausOperator::new(&j.matrix * c(dt.sqrt()), KrausLabel::Jump { k: n });
        op.sigma_e = j.sigma_e;
        ops.push(op);
    }
    Ok(KrausMap::new(ops)?)
}

fn populations_potential(pi: &[f64; 3]) -> Result<NonequilibriumPotential> {
    if let Some(i) = pi.iter().position(|&x| x <= 0.0) {
        return Err(ModelError::ZeroPopulation(i));
    }
    Ok(NonequilibriumPotential::from_spectrum(
        pi.iter().map(|x| -x.ln()).collect(),
        ProjectiveBasis::computational(3),
    )?)
}

/// Closed-form stationary populations `(π_g, π_A, π_B)` for equal rates.
pub fn machine_steady_state(p: &MachineParams) -> Result<[f64; 3]> {
    p.equal_rate().ok_or(ModelError::UnequalRates)?;
    let hw = p.hw();
    let e1 = (p.beta[0] * hw[0]).exp();
    let e2 = (p.beta[1] * hw[1]).exp();
    let e3 = (p.beta[2] * hw[2]).exp();
    let z = e2 * (e1 - 2.0) - 2.0 + e3 * (2.0 * e2 * (1.0 + e1) - 1.0);
    Ok([
        (e3 * (2.0 * e1 * e2 - 1.0) - e1 * e2) / z,
        (e2 * (e1 - 2.0) + e3 * (2.0 * e2 - 1.0)) / z,
        (e3 + e1 * e2 - 2.0) / z,
    ])
}

/// `Z_π` of the closed-form stationary state.
pub fn steady_state_normalizer(p: &MachineParams) -> f64 {
    let hw = p.hw();
    let e1 = (p.beta[0] * hw[0]).exp();
    let e2 = (p.beta[1] * hw[1]).exp();
    let e3 = (p.beta[2] * hw[2]).exp();
    e2 * (e1 - 2.0) - 2.0 + e3 * (2.0 * e2 * (1.0 + e1) - 1.0)
}

/// Closed-form stationary flows `(γħω_1Δ/Z_π, γħω_2Δ/Z_π, -Q̇_1 - Q̇_2)`.
pub fn steady_flows_closed_form(p: &MachineParams) -> Result<[f64; 3]> {
    let g = p.equal_rate().ok_or(ModelError::UnequalRates)?;
    let k = g * p.delta() / steady_state_normalizer(p);
    let (q1, q2) = (k * p.hw1, k * p.hw2);
    Ok([q1, q2, -(q1 + q2)])
}

/// `β'_1 = ln(π_g/π_A)/ħω_1`, `β'_2 = ln(π_A/π_B)/ħω_2`,
/// `β'_3 = ln(π_g/π_B)/ħω_3`.
pub fn virtual_temperatures(pi: &[f64; 3], p: &MachineParams) -> Result<[f64; 3]> {
    if let Some(i) = pi.iter().position(|&x| !(x > 0.0)) {
        return Err(ModelError::ZeroPopulation(i));
    }
    let hw = p.hw();
    Ok(std::array::from_fn(|r| {
        let (lo, hi) = transition(r);
        (pi[lo] / pi[hi]).ln() / hw[r]
    }))
}

/// `Q̇_r = Tr[H_S L_r(ρ)]` for a model from [`build_machine`].
pub fn machine_heat_flows(m: &LindbladModel, rho: &DensityOperator) -> Result<[f64; 3]> {
    if m.dim() != 3 || m.jumps().len() != 6 {
        return Err(invalid("model", "not a three-level machine"));
    }
    if rho.dim() != 3 {
        return Err(qtherm_lindblad::LindbladError::DimensionMismatch {
            expected: 3,
            got: rho.dim(),
        }
        .into());
    }
    let h = m.hamiltonian(0.0);
    Ok(std::array::from_fn(|r| {
        (&h * dissipator_apply(m, rho.matrix(), &[down(r), up(r)])).trace().re
    }))
}

/// Populations at stationarity: closed form for equal rates, otherwise the
/// numeric null space.
pub fn stationary_populations(p: &MachineParams) -> Result<[f64; 3]> {
    match p.equal_rate() {
        Some(_) => machine_steady_state(p),
        None => {
            let pi = build_machine(p)?.numeric_invariant(0.0)?;
            let v = pi.populations();
            Ok([v[0], v[1], v[2]])
        }
    }
}

/// One point of a `β_1` sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub beta1: f64,
    pub populations: [f64; 3],
    pub virtual_betas: [f64; 3],
    pub flows: [f64; 3],
}

/// Stationary populations, virtual temperatures and heat flows over `β_1`.
pub fn beta1_sweep(p: &MachineParams, beta1: &[f64]) -> Result<Vec<SweepPoint>> {
    beta1
        .par_iter()
        .map(|&b| {
            let q = p.with_beta1(b)?;
            let populations = stationary_populations(&q)?;
            let m = build_machine(&q)?;
            let flows = machine_heat_flows(&m, &DensityOperator::diagonal(&populations)?)?;
            Ok(SweepPoint {
                beta1: b,
                populations,
                virtual_betas: virtual_temperatures(&populations, &q)?,
                flows,
            })
        })
        .collect()
}

/// `n` equally spaced values from `lo` to `hi` inclusive.
pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect(),
    }
}

/// Refrigeration cycle `g → e_A → e_B → g`: absorb `ħω_1` from bath 1 and
/// `ħω_2` from bath 2, emit `ħω_3` into bath 3.
pub fn refrigeration_cycle(m: &LindbladModel, times: [f64; 3], t_final: f64) -> Result<JumpTrajectory> {
    let sigma = m.sigma_e()?;
    let dphi = m.jump_dphi(0.0)?;
    let events = [up(0), up(1), down(2)]
        .iter()
        .zip(times)
        .map(|(&k, t)| JumpEvent {
            k,
            t,
            sigma_e: sigma[k],
            dphi: dphi.as_ref().map(|d| d[k]),
        })
        .collect();
    Ok(JumpTrajectory::fixture(GROUND, events, GROUND, t_final))
}

/// Stochastic heat `q^(r) = ħω_r (n↑ - n↓)` per transition along a
/// trajectory of a machine model.
pub fn stochastic_heat(traj: &JumpTrajectory, p: &MachineParams) -> [f64; 3] {
    let hw = p.hw();
    let mut q = [0.0; 3];
    for e in &traj.events {
        let r = e.k / 2;
        q[r] += if e.k % 2 == 1 { hw[r] } else { -hw[r] };
    }
    q
}
