use crate::error::{Result, TrajectoryError};
use crate::process::{diagonal_residual, joint_weights, BackwardInit, BipartiteProcess};
use crate::record::{EntropyLedger, Step, TrajectoryRecord};
use crate::split::MapSplit;
use crate::{ENUMERATION_CAP, PROB_CUTOFF};
use qtherm_channels::{invariant_state, KrausLabel};
use qtherm_core::{
    mutual_information, partial_trace, relative_entropy, shannon_entropy, tol, von_neumann_entropy, CMatrix,
    DensityOperator, C64,
};

/// Backward initial weights `ϱ̃_{mμ}` and their marginals.
#[derive(Debug, Clone, PartialEq)]
pub struct BackwardWeights {
    /// `ϱ̃_{mμ}` at index `m·d_E + μ`.
    pub joint: Vec<f64>,
    /// `p̃_m`.
    pub system: Vec<f64>,
    /// `q̃_μ` over joint environment indices.
    pub environment: Vec<f64>,
    /// `q̃^(r)` per ancilla when the environment factorizes.
    pub ancillas: Option<Vec<Vec<f64>>>,
}

/// Exact outcome tables of a bipartite process.
#[derive(Debug, Clone)]
pub struct Enumeration {
    d_e: usize,
    d: usize,
    /// `P` at `[(m·d_E + μ)·D + (n·d_E + ν)]`.
    forward: Vec<f64>,
    /// `P̃` with the same indexing.
    reverse: Vec<f64>,
    /// `ϱ*_{mμ}`.
    rho_star: Vec<f64>,
    initial: Vec<f64>,
    p: Vec<f64>,
    q: Vec<f64>,
    ancilla_weights: Vec<Vec<f64>>,
    ancilla_dims: Vec<usize>,
    pub backward: BackwardWeights,
}

fn probability_table(a: &CMatrix, weights: impl Fn(usize) -> f64) -> Vec<f64> {
    let d = a.nrows();
    let mut out = vec![0.0; d * d];
    for row in 0..d {
        for col in 0..d {
            out[row * d + col] = weights(col) * a[(row, col)].norm_sqr();
        }
    }
    out
}

fn marginals(joint: &[f64], d_s: usize, d_e: usize) -> (Vec<f64>, Vec<f64>) {
    let mut ps = vec![0.0; d_s];
    let mut pe = vec![0.0; d_e];
    for m in 0..d_s {
        for mu in 0..d_e {
            ps[m] += joint[m * d_e + mu];
            pe[mu] += joint[m * d_e + mu];
        }
    }
    (ps, pe)
}

fn check_weights(w: &[f64], expected: usize, part: &'static str) -> Result<()> {
    if w.len() != expected {
        return Err(TrajectoryError::WeightLength {
            part,
            expected,
            got: w.len(),
        });
    }
    let s: f64 = w.iter().sum();
    if w.iter().any(|x| !x.is_finite() || *x < 0.0) || (s - 1.0).abs() > tol::TRACE {
        return Err(TrajectoryError::InvalidWeights(part));
    }
    Ok(())
}

fn safe_ln(x: f64) -> f64 {
    if x > 0.0 {
        x.ln()
    } else {
        f64::NEG_INFINITY
    }
}

impl Enumeration {
    pub fn new(p: &BipartiteProcess) -> Result<Self> {
        let (d_s, d_e) = (p.dim_s(), p.dim_e());
        let d = d_s * d_e;
        if d * d > ENUMERATION_CAP {
            return Err(TrajectoryError::CapExceeded {
                size: d * d,
                cap: ENUMERATION_CAP,
            });
        }
        let theta = p.theta;
        let init = p.system.basis.tensor(&p.environment_basis());
        let fin = p.system.final_basis.tensor(&p.environment_final_basis());
        let q = p.environment_weights();
        let initial = joint_weights([p.system.weights.as_slice(), q.as_slice()].into_iter());

        let a = fin.as_matrix().adjoint() * p.unitary() * init.as_matrix();
        let forward = probability_table(&a, |col| initial[col]);
        let mut rho_star = vec![0.0; d];
        for (row, r) in rho_star.iter_mut().enumerate() {
            *r = forward[row * d..(row + 1) * d].iter().sum();
        }

        let ancilla_dims: Vec<usize> = p.ancillas.iter().map(|a| a.dim()).collect();
        let ancilla_weights: Vec<Vec<f64>> = p.ancillas.iter().map(|a| a.weights.clone()).collect();
        let backward = resolve_backward(p, &rho_star, d_s, d_e, &ancilla_dims)?;

        let init_r = init.time_reversed(theta).as_matrix();
        let fin_r = fin.time_reversed(theta).as_matrix();
        let ar = init_r.adjoint() * p.reversed_unitary() * fin_r;
        // ar[(nν), (mμ)], transposed into forward indexing
        let mut reverse = vec![0.0; d * d];
        for row in 0..d {
            for col in 0..d {
                reverse[row * d + col] = backward.joint[row] * ar[(col, row)].norm_sqr();
            }
        }
        Ok(Self {
            d_e,
            d,
            forward,
            reverse,
            rho_star,
            initial,
            p: p.system.weights.clone(),
            q,
            ancilla_weights,
            ancilla_dims,
            backward,
        })
    }

    /// `ϱ*_{mμ}` at index `m·d_E + μ`.
    pub fn final_joint(&self) -> &[f64] {
        &self.rho_star
    }

    fn record(&self, row: usize, col: usize, prob: f64, other: f64) -> TrajectoryRecord {
        let (n, nu) = (col / self.d_e, col % self.d_e);
        let (m, mu) = (row / self.d_e, row % self.d_e);
        let step = Step {
            op: nu * self.d_e + mu,
            label: KrausLabel::Transition { nu, mu },
        };
        let mut r = TrajectoryRecord::new(n, vec![step], m, prob);
        r.reverse_prob = Some(other);
        r
    }

    fn records(&self, primary: &[f64], secondary: &[f64]) -> Vec<TrajectoryRecord> {
        let d = self.d;
        let mut out = Vec::new();
        for col in 0..d {
            for row in 0..d {
                let i = row * d + col;
                if primary[i] >= PROB_CUTOFF {
                    out.push(self.record(row, col, primary[i], secondary[i]));
                }
            }
        }
        out
    }

    /// Forward trajectories ordered by `(n, ν, μ, m)`, with `P̃(γ̃)` attached.
    pub fn forward_records(&self) -> Vec<TrajectoryRecord> {
        self.records(&self.forward, &self.reverse)
    }

    /// Backward trajectories, labeled by the forward trajectory they
    /// reverse; `prob` is `P̃(γ̃)` and `reverse_prob` is `P(γ)`.
    pub fn backward_records(&self) -> Vec<TrajectoryRecord> {
        self.records(&self.reverse, &self.forward)
    }

    fn indices(&self, rec: &TrajectoryRecord) -> (usize, usize, usize, usize) {
        let KrausLabel::Transition { nu, mu } = rec.steps[0].label else {
            panic!("bipartite records carry transition labels");
        };
        (rec.n, nu, mu, rec.m)
    }

    fn env_indices(&self, mut joint: usize) -> Vec<usize> {
        let mut out = vec![0; self.ancilla_dims.len()];
        for (r, d) in self.ancilla_dims.iter().enumerate().rev() {
            out[r] = joint % d;
            joint /= d;
        }
        out
    }

    /// `σ^S`, `σ^E`, `Ĩ` and `Δ_i s` for one trajectory.
    pub fn ledger(&self, rec: &TrajectoryRecord) -> EntropyLedger {
        let (n, nu, mu, m) = self.indices(rec);
        let b = &self.backward;
        let rho_t = b.joint[m * self.d_e + mu];
        let sigma_s = self.p[n].ln() - safe_ln(b.system[m]);
        let sigma_e = self.q[nu].ln() - safe_ln(b.environment[mu]);
        let i_tilde = safe_ln(rho_t) - safe_ln(b.system[m] * b.environment[mu]);
        let mut l = EntropyLedger::new(sigma_s, sigma_e, i_tilde);
        if rho_t <= 0.0 {
            l.delta_s = f64::INFINITY;
        }
        if let Some(parts) = &b.ancillas {
            let (from, to) = (self.env_indices(nu), self.env_indices(mu));
            l.sigma_e_parts = Some(
                (0..parts.len())
                    .map(|r| self.ancilla_weights[r][from[r]].ln() - safe_ln(parts[r][to[r]]))
                    .collect(),
            );
        }
        l
    }

    /// Ledger with the adiabatic/non-adiabatic split attached.
    pub fn split_ledger(&self, rec: &TrajectoryRecord, split: &MapSplit) -> EntropyLedger {
        self.ledger(rec).with_dphi(split.dphi[rec.steps[0].op])
    }

    /// Fills `P_D(γ)` and `P̃_D(γ̃)` from the dual and dual-reverse maps.
    pub fn attach_duals(&self, p: &BipartiteProcess, split: &MapSplit, records: &mut [TrajectoryRecord]) {
        let theta = p.theta;
        for rec in records {
            let (n, _, _, m) = self.indices(rec);
            let k = rec.steps[0].op;
            let psi_n = p.system.basis.vector(n);
            let psi_m = p.system.final_basis.vector(m);
            let d = &split.dual.op(k).matrix;
            let amp = (psi_m.adjoint() * d * psi_n)[(0, 0)];
            rec.dual_prob = Some(self.p[n] * amp.norm_sqr());
            let dr = &split.dual_reverse.op(k).matrix;
            let amp = (theta.apply_vector(psi_n).adjoint() * dr * theta.apply_vector(psi_m))[(0, 0)];
            rec.dual_reverse_prob = Some(self.backward.system[m] * amp.norm_sqr());
        }
    }

    pub fn forward_total(&self) -> f64 {
        self.forward.iter().sum()
    }

    pub fn reverse_total(&self) -> f64 {
        self.reverse.iter().sum()
    }

    /// `p_n q_ν` at index `n·d_E + ν`.
    pub fn initial_joint(&self) -> &[f64] {
        &self.initial
    }
}

fn resolve_backward(
    p: &BipartiteProcess,
    rho_star: &[f64],
    d_s: usize,
    d_e: usize,
    dims: &[usize],
) -> Result<BackwardWeights> {
    let (p_star, q_star) = marginals(rho_star, d_s, d_e);
    let product = |system: Vec<f64>, anc: Vec<Vec<f64>>| {
        let environment = joint_weights(anc.iter().map(Vec::as_slice));
        let joint = joint_weights([system.as_slice(), environment.as_slice()].into_iter());
        BackwardWeights {
            joint,
            system,
            environment,
            ancillas: Some(anc),
        }
    };
    Ok(match &p.backward_init {
        BackwardInit::Correlated => BackwardWeights {
            joint: rho_star.to_vec(),
            system: p_star,
            environment: q_star,
            ancillas: None,
        },
        BackwardInit::Product => product(p_star, ancilla_marginals(&q_star, dims)),
        BackwardInit::Reset => {
            let mut anc = Vec::with_capacity(p.ancillas.len());
            for a in &p.ancillas {
                let residual = diagonal_residual(a.state.matrix(), &a.final_basis);
                if residual > tol::HERM {
                    return Err(TrajectoryError::NotDiagonal {
                        part: "environment (final basis)",
                        residual,
                    });
                }
                anc.push(a.final_basis.vectors().iter().map(|v| a.state.weight(v).max(0.0)).collect());
            }
            product(p_star, anc)
        }
        BackwardInit::Custom { system, environment } => {
            check_weights(system, d_s, "system")?;
            if environment.len() != dims.len() {
                return Err(TrajectoryError::WeightLength {
                    part: "ancillas",
                    expected: dims.len(),
                    got: environment.len(),
                });
            }
            for (w, d) in environment.iter().zip(dims) {
                check_weights(w, *d, "environment")?;
            }
            product(system.clone(), environment.clone())
        }
    })
}

fn ancilla_marginals(q: &[f64], dims: &[usize]) -> Vec<Vec<f64>> {
    let mut out: Vec<Vec<f64>> = dims.iter().map(|d| vec![0.0; *d]).collect();
    for (mut joint, w) in q.iter().enumerate() {
        for (r, d) in dims.iter().enumerate().rev() {
            out[r][joint % d] += w;
            joint /= d;
        }
    }
    out
}

pub fn forward_distribution(p: &BipartiteProcess) -> Result<Vec<TrajectoryRecord>> {
    Ok(Enumeration::new(p)?.forward_records())
}

pub fn backward_distribution(p: &BipartiteProcess) -> Result<Vec<TrajectoryRecord>> {
    Ok(Enumeration::new(p)?.backward_records())
}

pub fn entropy_ledger(rec: &TrajectoryRecord, p: &BipartiteProcess) -> Result<EntropyLedger> {
    Ok(Enumeration::new(p)?.ledger(rec))
}

/// Split context for a bipartite process whose backward state is a product.
pub fn bipartite_split(p: &BipartiteProcess, e: &Enumeration, pi: &DensityOperator) -> Result<MapSplit> {
    if e.backward.ancillas.is_none() {
        return Err(TrajectoryError::SplitUnavailable(
            "correlated backward state has no reduced backward map".into(),
        ));
    }
    let map = p
        .kraus_map()?
        .with_transition_entropies(&p.environment_weights(), &e.backward.environment)?;
    MapSplit::new(&map, pi, p.theta)
}

/// `(Δ_i s^a, Δ_i s^na)` for one trajectory.
pub fn split_entropy(rec: &TrajectoryRecord, p: &BipartiteProcess, pi: &DensityOperator) -> Result<(f64, f64)> {
    let e = Enumeration::new(p)?;
    let split = bipartite_split(p, &e, pi)?;
    let l = e.split_ledger(rec, &split);
    Ok((l.delta_s_a.expect("split attached"), l.delta_s_na.expect("split attached")))
}

/// Invariant state of the reduced map, when it exists.
pub fn reduced_invariant_state(p: &BipartiteProcess) -> Result<DensityOperator> {
    Ok(invariant_state(&p.kraus_map()?)?)
}

/// Average entropy productions of a bipartite process.
#[derive(Debug, Clone, PartialEq)]
pub struct AverageEntropies {
    /// `S(ρ*_SE) - S(ρ_SE)`.
    pub inclusive: f64,
    /// `S(ρ*_S) - S(ρ_S) + S(ρ*_E) - S(ρ_E)`.
    pub non_inclusive: f64,
    /// `S(ρ*_S) - S(ρ'_S) + S(ρ*_E) - S(ρ'_E)`.
    pub measurement_disturbance: f64,
    /// `I(ρ'_SE) - I(ρ*_SE)`.
    pub correlation_erasure: f64,
    /// `I(ρ'_SE)`.
    pub final_correlations: f64,
    /// `I(ρ*_SE)`.
    pub measured_correlations: f64,
    /// `S(ρ*_E ‖ ρ_E)` for the reset backward state.
    pub reset_extra: Option<f64>,
    /// `<Δ_i s>` for the configured backward state.
    pub trajectory_mean: f64,
}

pub fn average_entropies(p: &BipartiteProcess) -> Result<AverageEntropies> {
    let e = Enumeration::new(p)?;
    let (d_s, d_e) = (p.dim_s(), p.dim_e());
    let rho_e = p.environment_state();
    let s0 = von_neumann_entropy(&p.system.state)? + von_neumann_entropy(&rho_e)?;
    let h_star = shannon_entropy(&e.rho_star);
    let (p_star, q_star) = marginals(&e.rho_star, d_s, d_e);
    let (hs, he) = (shannon_entropy(&p_star), shannon_entropy(&q_star));

    let global = DensityOperator::product(&p.system.state, &rho_e);
    let u = p.unitary();
    let after = DensityOperator::from_trusted(u * global.matrix() * u.adjoint(), vec![d_s, d_e]);
    let s_prime = von_neumann_entropy(&partial_trace(&after, 0)?)? + von_neumann_entropy(&partial_trace(&after, 1)?)?;
    let i_prime = mutual_information(&after)?;
    let i_star = hs + he - h_star;

    let reset_extra = if p.backward_init == BackwardInit::Reset {
        let fin = p.environment_final_basis();
        let mut m = CMatrix::zeros(d_e, d_e);
        for (w, v) in q_star.iter().zip(fin.vectors()) {
            m += v * v.adjoint() * C64::new(*w, 0.0);
        }
        let rho_e_star = DensityOperator::from_trusted(m, vec![d_e]);
        Some(relative_entropy(&rho_e_star, &rho_e)?)
    } else {
        None
    };

    let mut mean = 0.0;
    for rec in e.forward_records() {
        mean += rec.prob * e.ledger(&rec).delta_s;
    }
    Ok(AverageEntropies {
        inclusive: h_star - s0,
        non_inclusive: hs + he - s0,
        measurement_disturbance: hs + he - s_prime,
        correlation_erasure: i_prime - i_star,
        final_correlations: i_prime,
        measured_correlations: i_star,
        reset_extra,
        trajectory_mean: mean,
    })
}
