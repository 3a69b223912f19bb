use crate::error::{LindbladError, Result};
use crate::model::LindbladModel;
use qtherm_core::{eig_hermitian, trace_distance, CMatrix, CVector, DensityOperator, ProjectiveBasis, C64};
use qtherm_trajectories::{trajectory_rng, EntropyLedger, Part};
use rand::Rng;
use rayon::prelude::*;

/// Jump-probability bound per step above which results carry a coarse-step flag.
pub const COARSE_STEP: f64 = 0.05;
/// Batches used for the sampling error of ensemble averages.
const BATCHES: usize = 20;
const NORM_FLOOR: f64 = 1e-300;

#[derive(Debug, Clone)]
pub struct UnravelConfig {
    pub t_final: f64,
    /// Upper bound on the step; the actual step divides `t_final` evenly.
    pub dt: f64,
    pub count: usize,
    pub seed: u64,
    /// Final projective measurement.
    pub final_basis: ProjectiveBasis,
    /// Initial measurement basis; defaults to the eigenbasis of `ρ_0`.
    pub initial_basis: Option<ProjectiveBasis>,
    /// Times at which each trajectory's state is stored.
    pub checkpoints: Vec<f64>,
    /// Keep the normalized state before and after every jump.
    pub record_path: bool,
}

impl UnravelConfig {
    pub fn new(t_final: f64, dt: f64, count: usize, seed: u64, final_basis: ProjectiveBasis) -> Self {
        Self {
            t_final,
            dt,
            count,
            seed,
            final_basis,
            initial_basis: None,
            checkpoints: Vec::new(),
            record_path: false,
        }
    }

    pub fn with_initial_basis(mut self, b: ProjectiveBasis) -> Self {
        self.initial_basis = Some(b);
        self
    }

    pub fn with_checkpoints(mut self, ts: Vec<f64>) -> Self {
        self.checkpoints = ts;
        self
    }

    pub fn with_path(mut self) -> Self {
        self.record_path = true;
        self
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct JumpEvent {
    pub k: usize,
    pub t: f64,
    pub sigma_e: f64,
    /// `Δφ_k` when the split is available.
    pub dphi: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PathPoint {
    pub before: CVector,
    pub after: CVector,
}

/// `γ = {n, (k_1, t_1), …, (k_N, t_N), m}`.
#[derive(Debug, Clone, PartialEq)]
pub struct JumpTrajectory {
    pub n: usize,
    pub events: Vec<JumpEvent>,
    pub m: usize,
    pub t_final: f64,
    /// States at the configured checkpoints.
    pub snapshots: Vec<CVector>,
    /// Empty unless the path was requested.
    pub path: Vec<PathPoint>,
    pub split_available: bool,
}

impl JumpTrajectory {
    /// Trajectory given by hand, for ledger checks.
    pub fn fixture(n: usize, events: Vec<JumpEvent>, m: usize, t_final: f64) -> Self {
        let split_available = events.iter().all(|e| e.dphi.is_some());
        Self {
            n,
            events,
            m,
            t_final,
            snapshots: Vec::new(),
            path: Vec::new(),
            split_available,
        }
    }

    pub fn sigma_e(&self) -> f64 {
        self.events.iter().map(|e| e.sigma_e).sum()
    }

    pub fn dphi(&self) -> Option<f64> {
        if !self.split_available {
            return None;
        }
        self.events.iter().map(|e| e.dphi).sum()
    }
}

/// Sampled trajectories together with the boundary measurements.
#[derive(Debug, Clone)]
pub struct Unraveling {
    pub trajectories: Vec<JumpTrajectory>,
    /// Initial outcome distribution `p_n` and its basis.
    pub initial: Part,
    pub final_basis: ProjectiveBasis,
    /// Step actually used.
    pub dt: f64,
    pub checkpoints: Vec<f64>,
    /// Step exceeded [`COARSE_STEP`] in jump probability.
    pub coarse: bool,
}

/// `dt · λ_max(Σ L^dag L)`, an upper bound on the jump probability per step.
pub fn jump_probability_bound(m: &LindbladModel, t: f64, dt: f64) -> Result<f64> {
    let k = m.decay_operator(t);
    Ok(dt * eig_hermitian(&k)?.values.last().copied().unwrap_or(0.0).max(0.0))
}

fn effective_propagator(m: &LindbladModel, t: f64, h: f64) -> CMatrix {
    (m.drift(t) * C64::new(h, 0.0)).exp()
}

/// Nonzero entries `(i, j, A_ij)` of a matrix.
fn entries(a: &CMatrix) -> Vec<(usize, usize, C64)> {
    let mut out = Vec::new();
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            if a[(i, j)] != C64::new(0.0, 0.0) {
                out.push((i, j, a[(i, j)]));
            }
        }
    }
    out
}

/// `<ψ|A|ψ>` for Hermitian `A` given by its nonzero entries.
fn quadratic_form(a: &[(usize, usize, C64)], psi: &CVector) -> f64 {
    a.iter().map(|&(i, j, v)| (psi[i].conj() * v * psi[j]).re).sum()
}

/// Index whose cumulative weight first exceeds `u`.
fn select(weights: impl Iterator<Item = f64>, u: f64) -> Option<usize> {
    let mut acc = 0.0;
    for (i, w) in weights.enumerate() {
        acc += w;
        if w > 0.0 && u < acc {
            return Some(i);
        }
    }
    None
}

/// As [`select`] for a normalized distribution, absorbing rounding in the
/// last nonzero entry.
fn sample(weights: &[f64], u: f64) -> usize {
    select(weights.iter().copied(), u)
        .or_else(|| weights.iter().rposition(|w| *w > 0.0))
        .expect("distribution has positive weight")
}

/// Quantum-jump unraveling: per step, jump `k` with probability
/// `dt ||L_k ψ||²`, otherwise `ψ → U_eff ψ / ||U_eff ψ||` with the exact
/// propagator of `H_eff = H - (iħ/2) Σ L^dag L`.
pub fn unravel(m: &LindbladModel, rho0: &DensityOperator, cfg: &UnravelConfig) -> Result<Unraveling> {
    if rho0.dim() != m.dim() || cfg.final_basis.dim() != m.dim() {
        return Err(LindbladError::DimensionMismatch {
            expected: m.dim(),
            got: rho0.dim().max(cfg.final_basis.dim()),
        });
    }
    if !(cfg.t_final > 0.0) || !(cfg.dt > 0.0) || cfg.checkpoints.iter().any(|&c| c < 0.0 || c > cfg.t_final) {
        return Err(LindbladError::InvalidGrid);
    }
    let initial = match &cfg.initial_basis {
        Some(b) => Part::with_basis(rho0.clone(), b.clone(), cfg.final_basis.clone(), "initial")?,
        None => Part::new(rho0.clone(), cfg.final_basis.clone(), "initial")?,
    };
    let n_steps = (cfg.t_final / cfg.dt - 1e-9).ceil().max(1.0) as usize;
    let h = cfg.t_final / n_steps as f64;

    let mut bound: f64 = 0.0;
    let propagators: Vec<CMatrix> = if m.is_driven() {
        (0..n_steps).map(|i| effective_propagator(m, (i as f64 + 0.5) * h, h)).collect()
    } else {
        vec![effective_propagator(m, 0.0, h)]
    };
    let sample_times: Vec<f64> = if m.is_driven() {
        (0..n_steps).map(|i| i as f64 * h).collect()
    } else {
        vec![0.0]
    };
    for &t in &sample_times {
        bound = bound.max(jump_probability_bound(m, t, h)?);
    }
    if bound >= 1.0 {
        return Err(LindbladError::StepTooLarge { dt: h, bound });
    }
    let sigma = m.sigma_e()?;
    // models without a unique invariant state simply lack the split
    let frozen_dphi = m.jump_dphi(0.0).ok().flatten();
    let checkpoint_steps: Vec<usize> = cfg.checkpoints.iter().map(|c| (c / h).round() as usize).collect();

    let d = m.dim();
    let decays: Vec<_> = m.jumps().iter().map(|l| entries(&(l.matrix.adjoint() * &l.matrix))).collect();
    let run = |index: usize| -> Result<JumpTrajectory> {
        let mut rng = trajectory_rng(cfg.seed, index as u64);
        let n = sample(&initial.weights, rng.random::<f64>());
        let mut psi = initial.basis.vector(n).clone();
        let mut events = Vec::new();
        let mut path = Vec::new();
        let mut snapshots = vec![CVector::zeros(0); checkpoint_steps.len()];
        let mut split = frozen_dphi.is_some();
        let store = |step: usize, psi: &CVector, snaps: &mut Vec<CVector>| {
            for (slot, &s) in checkpoint_steps.iter().enumerate() {
                if s == step {
                    snaps[slot] = psi.clone();
                }
            }
        };
        store(0, &psi, &mut snapshots);
        let mut probs = vec![0.0; decays.len()];
        let mut next = CVector::zeros(d);
        for step in 0..n_steps {
            let t = step as f64 * h;
            for (p, kk) in probs.iter_mut().zip(&decays) {
                *p = h * quadratic_form(kk, &psi);
            }
            let u: f64 = rng.random();
            match select(probs.iter().copied(), u) {
                Some(k) => {
                    let v = &m.jumps()[k].matrix * &psi;
                    let after = &v / C64::new(v.norm(), 0.0);
                    let te = t + h;
                    let dphi = if m.is_driven() {
                        m.jump_dphi(te).ok().flatten().map(|d| d[k])
                    } else {
                        frozen_dphi.as_ref().map(|d| d[k])
                    };
                    split &= dphi.is_some();
                    if cfg.record_path {
                        path.push(PathPoint {
                            before: psi.clone(),
                            after: after.clone(),
                        });
                    }
                    events.push(JumpEvent {
                        k,
                        t: te,
                        sigma_e: sigma[k],
                        dphi,
                    });
                    psi = after;
                }
                None => {
                    let u_eff = &propagators[if m.is_driven() { step } else { 0 }];
                    u_eff.mul_to(&psi, &mut next);
                    let norm = next.norm();
                    if norm < NORM_FLOOR {
                        return Err(LindbladError::NotNormalizable(t + h));
                    }
                    next.unscale_mut(norm);
                    std::mem::swap(&mut psi, &mut next);
                }
            }
            store(step + 1, &psi, &mut snapshots);
        }
        let final_probs: Vec<f64> = cfg.final_basis.vectors().iter().map(|b| b.dotc(&psi).norm_sqr()).collect();
        let m_out = sample(&final_probs, rng.random::<f64>());
        Ok(JumpTrajectory {
            n,
            events,
            m: m_out,
            t_final: cfg.t_final,
            snapshots,
            path,
            split_available: split,
        })
    };
    let trajectories = (0..cfg.count).into_par_iter().map(run).collect::<Result<Vec<_>>>()?;
    Ok(Unraveling {
        trajectories,
        initial,
        final_basis: cfg.final_basis.clone(),
        dt: h,
        checkpoints: cfg.checkpoints.clone(),
        coarse: bound > COARSE_STEP,
    })
}

/// Ensemble mean of `|ψ><ψ|` at one checkpoint with its sampling error.
#[derive(Debug, Clone)]
pub struct EnsembleAverage {
    pub mean: DensityOperator,
    /// Standard error of the trace distance to the mean, from batch means.
    pub stderr: f64,
}

impl EnsembleAverage {
    pub fn trace_distance(&self, rho: &DensityOperator) -> Result<f64> {
        Ok(trace_distance(self.mean.matrix(), rho.matrix())?)
    }
}

fn mean_projector<'a>(psis: impl Iterator<Item = &'a CVector>, d: usize) -> (CMatrix, usize) {
    let mut acc = CMatrix::zeros(d, d);
    let mut n = 0;
    for psi in psis {
        acc += psi * psi.adjoint();
        n += 1;
    }
    (acc / C64::new(n.max(1) as f64, 0.0), n)
}

pub fn ensemble_average(u: &Unraveling, checkpoint: usize) -> Result<EnsembleAverage> {
    let trajs = &u.trajectories;
    if trajs.is_empty() {
        return Err(LindbladError::Empty);
    }
    let d = u.final_basis.dim();
    let (mean, _) = mean_projector(trajs.iter().map(|t| &t.snapshots[checkpoint]), d);
    let b = BATCHES.min(trajs.len());
    let size = trajs.len() / b;
    let mut ss = 0.0;
    if b > 1 {
        for i in 0..b {
            let (m_b, _) = mean_projector(trajs[i * size..(i + 1) * size].iter().map(|t| &t.snapshots[checkpoint]), d);
            ss += trace_distance(&m_b, &mean)?.powi(2);
        }
    }
    let stderr = if b > 1 { (ss / (b * (b - 1)) as f64).sqrt() } else { f64::INFINITY };
    Ok(EnsembleAverage {
        mean: DensityOperator::from_trusted(mean, vec![d]),
        stderr,
    })
}

/// Jumps per channel over all trajectories.
pub fn jump_counts(u: &Unraveling, channels: usize) -> Vec<usize> {
    let mut c = vec![0; channels];
    for t in &u.trajectories {
        for e in &t.events {
            c[e.k] += 1;
        }
    }
    c
}

/// `Δ_i s = σ^S_{nm} + Σ_j σ^E_{k_j}` with `σ^S = ln p_n - ln p̃_m`; the
/// split uses `Δφ = Σ_j Δφ_{k_j}` when available.
pub fn trajectory_entropies(traj: &JumpTrajectory, boundary: (f64, f64)) -> EntropyLedger {
    let (p_n, p_tilde) = boundary;
    let ln = |p: f64| if p > 0.0 { p.ln() } else { f64::NEG_INFINITY };
    let ledger = EntropyLedger::new(ln(p_n) - ln(p_tilde), traj.sigma_e(), 0.0);
    match traj.dphi() {
        Some(d) => ledger.with_dphi(d),
        None => ledger,
    }
}

/// Ledgers for every trajectory, with `p_n` from the initial measurement
/// and `p̃_m` the backward initial distribution in the final basis.
pub fn unraveling_ledgers(u: &Unraveling, backward: &[f64]) -> Result<Vec<EntropyLedger>> {
    if backward.len() != u.final_basis.len() {
        return Err(LindbladError::DimensionMismatch {
            expected: u.final_basis.len(),
            got: backward.len(),
        });
    }
    Ok(u.trajectories
        .iter()
        .map(|t| trajectory_entropies(t, (u.initial.weights[t.n], backward[t.m])))
        .collect())
}
