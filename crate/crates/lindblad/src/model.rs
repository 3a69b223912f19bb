use crate::error::{LindbladError, Result};
use crate::operator::Operator;
use qtherm_channels::{
    check_ladder_condition, nonequilibrium_potential, ConditionReport, KrausLabel, KrausMap,
    KrausOperator, NonequilibriumPotential,
};
use qtherm_channels::PD_FLOOR;
use qtherm_core::{commutator, hermiticity_residual, max_abs, tol, CMatrix, DensityOperator, Protocol, C64};
use std::fmt;
use std::sync::Arc;

/// Relative mismatch accepted when matching `L_j` against `L_i^dag`.
const PAIR_TOL: f64 = 1e-10;
/// Largest dimension for the dense null-space solve.
const NUMERIC_INVARIANT_MAX_DIM: usize = 48;
/// Singular values below this fraction of the generator scale span the null space.
const NULL_TOL: f64 = 1e-11;

/// Commutator norm below which the no-jump operator leaves `Φ` invariant.
const SPLIT_COMMUTATOR_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct JumpOperator {
    /// `L_k` in units of rate^{1/2}.
    pub matrix: CMatrix,
    /// Environment entropy change `σ^E_k` per jump (nats).
    pub sigma_e: Option<f64>,
}

impl JumpOperator {
    pub fn new(matrix: CMatrix) -> Self {
        Self { matrix, sigma_e: None }
    }

    pub fn with_sigma_e(mut self, s: f64) -> Self {
        self.sigma_e = Some(s);
        self
    }
}

type PotentialFn = Arc<dyn Fn(f64) -> NonequilibriumPotential + Send + Sync>;

/// Source of the instantaneous invariant state `π_λ`.
#[derive(Clone, Default)]
pub enum InvariantSupplier {
    /// Fixed potential for frozen or undriven models.
    Constant(NonequilibriumPotential),
    /// Analytic `Φ(λ_t)`.
    Driven(PotentialFn),
    /// Fixed point of the one-step map at each time.
    #[default]
    Numeric,
}

impl fmt::Debug for InvariantSupplier {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Constant(_) => f.write_str("Constant"),
            Self::Driven(_) => f.write_str("Driven"),
            Self::Numeric => f.write_str("Numeric"),
        }
    }
}

#[derive(Clone)]
enum Hamiltonian {
    Constant(CMatrix),
    Driven(Protocol),
}

/// Generator pieces at one instant.
#[derive(Debug, Clone)]
pub(crate) struct Generator {
    /// `H_eff / (iħ) = -(i/ħ) H - K/2` with `K = Σ L^dag L`.
    pub drift: Operator,
    pub jumps: Vec<Operator>,
    pub hamiltonian: CMatrix,
    pub decay: CMatrix,
}

/// `dρ/dt = -(i/ħ)[H, ρ] + Σ_k (L_k ρ L_k^dag - {L_k^dag L_k, ρ}/2)`.
#[derive(Clone)]
pub struct LindbladModel {
    dim: usize,
    hbar: f64,
    hamiltonian: Hamiltonian,
    jumps: Vec<JumpOperator>,
    invariant: InvariantSupplier,
    frozen: Option<Arc<Generator>>,
}

impl fmt::Debug for LindbladModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("LindbladModel")
            .field("dim", &self.dim)
            .field("hbar", &self.hbar)
            .field("driven", &self.is_driven())
            .field("jumps", &self.jumps.len())
            .field("invariant", &self.invariant)
            .finish()
    }
}

fn check_dim(m: &CMatrix, d: usize) -> Result<()> {
    if !m.is_square() || m.nrows() != d {
        return Err(LindbladError::DimensionMismatch {
            expected: d,
            got: m.nrows(),
        });
    }
    Ok(())
}

fn check_hermitian(h: &CMatrix) -> Result<()> {
    let r = hermiticity_residual(h);
    if r > tol::HERM {
        return Err(LindbladError::NotHermitian(r));
    }
    Ok(())
}

impl LindbladModel {
    /// Time-independent Hamiltonian.
    pub fn new(hamiltonian: CMatrix, jumps: Vec<JumpOperator>) -> Result<Self> {
        let d = hamiltonian.nrows();
        check_dim(&hamiltonian, d)?;
        check_hermitian(&hamiltonian)?;
        Self::build(d, Hamiltonian::Constant(hamiltonian), jumps)
    }

    /// Hamiltonian `H(λ_t)` from a protocol; jump operators stay fixed.
    pub fn driven(protocol: Protocol, jumps: Vec<JumpOperator>) -> Result<Self> {
        let h0 = protocol.hamiltonian(0.0).ok_or(LindbladError::NoHamiltonian)?;
        let d = protocol.dim();
        check_dim(&h0, d)?;
        check_hermitian(&h0)?;
        Self::build(d, Hamiltonian::Driven(protocol), jumps)
    }

    fn build(dim: usize, hamiltonian: Hamiltonian, jumps: Vec<JumpOperator>) -> Result<Self> {
        for j in &jumps {
            check_dim(&j.matrix, dim)?;
        }
        let mut m = Self {
            dim,
            hbar: 1.0,
            hamiltonian,
            jumps,
            invariant: InvariantSupplier::Numeric,
            frozen: None,
        };
        m.refreeze();
        Ok(m)
    }

    fn refreeze(&mut self) {
        self.frozen = match &self.hamiltonian {
            Hamiltonian::Constant(h) => Some(Arc::new(self.compile(h.clone()))),
            Hamiltonian::Driven(_) => None,
        };
    }

    fn compile(&self, h: CMatrix) -> Generator {
        let d = self.dim;
        let mut k = CMatrix::zeros(d, d);
        for j in &self.jumps {
            k += j.matrix.adjoint() * &j.matrix;
        }
        let drift = &h * C64::new(0.0, -1.0 / self.hbar) - &k * C64::new(0.5, 0.0);
        Generator {
            drift: Operator::new(drift),
            jumps: self.jumps.iter().map(|j| Operator::new(j.matrix.clone())).collect(),
            hamiltonian: h,
            decay: k,
        }
    }

    pub fn with_hbar(mut self, hbar: f64) -> Self {
        self.hbar = hbar;
        self.refreeze();
        self
    }

    pub fn with_invariant(mut self, invariant: InvariantSupplier) -> Self {
        self.invariant = invariant;
        self
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn hbar(&self) -> f64 {
        self.hbar
    }

    pub fn is_driven(&self) -> bool {
        matches!(self.hamiltonian, Hamiltonian::Driven(_))
    }

    pub fn jumps(&self) -> &[JumpOperator] {
        &self.jumps
    }

    pub fn invariant_supplier(&self) -> &InvariantSupplier {
        &self.invariant
    }

    /// `H(λ_t)`.
    pub fn hamiltonian(&self, t: f64) -> CMatrix {
        match &self.hamiltonian {
            Hamiltonian::Constant(h) => h.clone(),
            Hamiltonian::Driven(p) => p.hamiltonian(t).expect("driven protocols carry a Hamiltonian"),
        }
    }

    pub(crate) fn generator(&self, t: f64) -> Arc<Generator> {
        match &self.frozen {
            Some(g) => g.clone(),
            None => Arc::new(self.compile(self.hamiltonian(t))),
        }
    }

    /// `K = Σ_k L_k^dag L_k`.
    pub fn decay_operator(&self, t: f64) -> CMatrix {
        self.generator(t).decay.clone()
    }

    /// `-iH_eff/ħ = -(i/ħ)H - K/2`.
    pub fn drift(&self, t: f64) -> CMatrix {
        self.generator(t).drift.dense.clone()
    }

    /// `σ^E_k` for every jump.
    pub fn sigma_e(&self) -> Result<Vec<f64>> {
        self.jumps
            .iter()
            .enumerate()
            .map(|(k, j)| j.sigma_e.ok_or(LindbladError::MissingSigmaE(k)))
            .collect()
    }

    /// `max |Σ_k (L^dag L - L L^dag e^{-σ_k})|`.
    pub fn consistency_residual(&self) -> Result<f64> {
        let sigma = self.sigma_e()?;
        let d = self.dim;
        let mut s = CMatrix::zeros(d, d);
        for (j, sk) in self.jumps.iter().zip(sigma) {
            let l = &j.matrix;
            s += l.adjoint() * l - l * l.adjoint() * C64::new((-sk).exp(), 0.0);
        }
        Ok(max_abs(&s))
    }

    /// Kraus form of one step: `M_0 = I - dt (iH/ħ + K/2)`, `M_k = √dt L_k`.
    /// Complete only to first order in `dt`.
    pub fn one_step_map(&self, t: f64, dt: f64) -> Result<KrausMap> {
        let g = self.generator(t);
        let d = self.dim;
        let m0 = CMatrix::identity(d, d) + &g.drift.dense * C64::new(dt, 0.0);
        let mut ops = vec![KrausOperator::new(m0, KrausLabel::NoJump).with_sigma_e(0.0)];
        for (k, j) in self.jumps.iter().enumerate() {
            let mut op = KrausOperator::new(&j.matrix * C64::new(dt.sqrt(), 0.0), KrausLabel::Jump { k });
            op.sigma_e = j.sigma_e;
            ops.push(op);
        }
        Ok(KrausMap::new_unchecked(ops)?)
    }

    /// Scale of the generator, used to pick steps.
    pub fn rate_scale(&self, t: f64) -> f64 {
        let g = self.generator(t);
        max_abs(&g.hamiltonian) / self.hbar + max_abs(&g.decay)
    }

    /// `Φ(λ_t)`.
    pub fn potential(&self, t: f64) -> Result<NonequilibriumPotential> {
        match &self.invariant {
            InvariantSupplier::Constant(p) => Ok(p.clone()),
            InvariantSupplier::Driven(f) => Ok(f(t)),
            InvariantSupplier::Numeric => Ok(nonequilibrium_potential(&self.numeric_invariant(t)?)?),
        }
    }

    /// `π_λ` at time `t`.
    pub fn invariant_state(&self, t: f64) -> Result<DensityOperator> {
        match &self.invariant {
            InvariantSupplier::Numeric => self.numeric_invariant(t),
            _ => Ok(self.potential(t)?.state()),
        }
    }

    /// Superoperator of the frozen generator on row-major `vec(ρ)`.
    pub fn liouvillian_matrix(&self, t: f64) -> CMatrix {
        let g = self.generator(t);
        let d = self.dim;
        let id = CMatrix::identity(d, d);
        let drift = &g.drift.dense;
        let mut s = drift.kronecker(&id) + id.kronecker(&drift.map(|z| z.conj()));
        for l in &self.jumps {
            s += l.matrix.kronecker(&l.matrix.map(|z| z.conj()));
        }
        s
    }

    /// Unique null vector of the frozen generator, positive definite.
    pub fn numeric_invariant(&self, t: f64) -> Result<DensityOperator> {
        let d = self.dim;
        if d > NUMERIC_INVARIANT_MAX_DIM {
            return Err(LindbladError::NoSteadyState(format!(
                "dimension {d} exceeds {NUMERIC_INVARIANT_MAX_DIM}; supply the invariant state"
            )));
        }
        let l = self.liouvillian_matrix(t);
        let scale = max_abs(&l).max(f64::MIN_POSITIVE);
        let svd = l.svd(false, true);
        let v_t = svd.v_t.expect("requested right singular vectors");
        let mut order: Vec<usize> = (0..d * d).collect();
        order.sort_by(|&i, &j| svd.singular_values[i].total_cmp(&svd.singular_values[j]));
        let null = order
            .iter()
            .take_while(|&&i| svd.singular_values[i] <= NULL_TOL * scale)
            .count();
        if null != 1 {
            return Err(LindbladError::NoSteadyState(format!("null space of dimension {null}")));
        }
        let row = v_t.row(order[0]);
        let m = CMatrix::from_fn(d, d, |i, j| row[i * d + j].conj());
        let m = &m / m.trace();
        let m = (&m + m.adjoint()) * C64::new(0.5, 0.0);
        let pi = DensityOperator::from_trusted(m, vec![d]);
        let min = pi.eigen().values[0];
        if min <= PD_FLOOR {
            return Err(LindbladError::NoSteadyState(format!("smallest eigenvalue {min:e}")));
        }
        Ok(pi)
    }

    /// Conditions for the adiabatic/non-adiabatic split at time `t`.
    pub fn split_diagnostics(&self, t: f64) -> Result<SplitDiagnostics> {
        let phi = self.potential(t)?;
        let g = self.generator(t);
        let ops = self
            .jumps
            .iter()
            .enumerate()
            .map(|(k, j)| KrausOperator::new(j.matrix.clone(), KrausLabel::Jump { k }))
            .collect();
        let map = KrausMap::new_unchecked(ops)?;
        let ladder = check_ladder_condition(&map, &phi);
        let h_decay = max_abs(&commutator(&g.hamiltonian, &g.decay));
        let h_potential = max_abs(&commutator(&g.hamiltonian, &phi.matrix()));
        let available = ladder.satisfied && h_decay <= SPLIT_COMMUTATOR_TOL && h_potential <= SPLIT_COMMUTATOR_TOL;
        Ok(SplitDiagnostics {
            ladder,
            h_decay,
            h_potential,
            available,
        })
    }

    /// `Δφ_k` per jump when the split is available.
    pub fn jump_dphi(&self, t: f64) -> Result<Option<Vec<f64>>> {
        let diag = self.split_diagnostics(t)?;
        Ok(diag
            .available
            .then(|| diag.ladder.dphi.iter().map(|d| d.unwrap_or(0.0)).collect()))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SplitDiagnostics {
    pub ladder: ConditionReport,
    /// `max |[H, Σ L^dag L]|`.
    pub h_decay: f64,
    /// `max |[H, Φ]|`.
    pub h_potential: f64,
    pub available: bool,
}

/// `σ^E` from pairs `L_i = √Γ_i L`, `L_j = √Γ_j L^dag`: `σ_i = ln(Γ_i/Γ_j)`.
///
/// Hermitian operators pair with themselves (`σ = 0`). Operators with a
/// preassigned `σ^E` are kept; any other operator without a partner is an
/// error. The consistency condition is verified afterwards.
pub fn assign_environment_entropies(m: &LindbladModel) -> Result<LindbladModel> {
    let n = m.jumps.len();
    let mut sigma: Vec<Option<f64>> = m.jumps.iter().map(|j| j.sigma_e).collect();
    let norms: Vec<f64> = m.jumps.iter().map(|j| j.matrix.norm_squared()).collect();
    for i in 0..n {
        if sigma[i].is_some() || norms[i] == 0.0 {
            if sigma[i].is_none() {
                sigma[i] = Some(0.0);
            }
            continue;
        }
        let li_dag = m.jumps[i].matrix.adjoint();
        let partner = (0..n).find(|&j| {
            if norms[j] == 0.0 {
                return false;
            }
            // L_i^dag = √(Γ_i/Γ_j) L_j
            let r = (norms[i] / norms[j]).sqrt();
            let diff = &li_dag - &m.jumps[j].matrix * C64::new(r, 0.0);
            diff.norm_squared() <= PAIR_TOL * PAIR_TOL * norms[i]
        });
        match partner {
            Some(j) => {
                let s = (norms[i] / norms[j]).ln();
                sigma[i] = Some(s);
                if j != i && sigma[j].is_none() {
                    sigma[j] = Some(-s);
                }
            }
            None => return Err(LindbladError::Unpaired(i)),
        }
    }
    let mut out = m.clone();
    for (j, s) in out.jumps.iter_mut().zip(sigma) {
        j.sigma_e = s;
    }
    out.refreeze();
    let r = out.consistency_residual()?;
    if r > tol::CONS * max_abs(&out.decay_operator(0.0)).max(1.0) {
        return Err(LindbladError::Inconsistent(r));
    }
    Ok(out)
}
