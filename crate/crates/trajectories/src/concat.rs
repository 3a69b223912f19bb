use crate::error::{Result, TrajectoryError};
use crate::process::Part;
use crate::record::{EntropyLedger, Step, TrajectoryRecord};
use crate::sample::trajectory_rng;
use crate::split::MapSplit;
use crate::{ENUMERATION_CAP, PROB_CUTOFF};
use qtherm_channels::{backward_map, ChannelError, Concatenation, KrausMap};
use qtherm_core::{tol, CMatrix, CVector, TimeReversal};
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rayon::prelude::*;

/// A concatenation with the system measured only at both ends.
#[derive(Debug, Clone)]
pub struct ConcatenationProcess {
    pub conc: Concatenation,
    pub system: Part,
    pub theta: TimeReversal,
    /// `p̃_m`; defaults to the final populations `p*_m`.
    pub backward_system: Vec<f64>,
    backward: Vec<KrausMap>,
    splits: std::result::Result<Vec<MapSplit>, String>,
}

impl ConcatenationProcess {
    /// Every operator needs `σ^E`. The split is prepared when every map
    /// satisfies the ladder condition with a backward-invariant `Θ π Θ^dag`.
    pub fn new(conc: Concatenation, system: Part) -> Result<Self> {
        if system.dim() != conc.dim() {
            return Err(TrajectoryError::DimensionMismatch {
                expected: conc.dim(),
                got: system.dim(),
            });
        }
        let theta = TimeReversal::default();
        let backward = conc
            .maps
            .iter()
            .map(|m| backward_map(m, theta))
            .collect::<std::result::Result<Vec<_>, ChannelError>>()?;
        let splits = conc
            .maps
            .iter()
            .zip(&conc.invariants)
            .map(|(m, pi)| MapSplit::new(m, pi, theta))
            .collect::<Result<Vec<_>>>()
            .map_err(|e| e.to_string());
        let out = conc.apply(&system.state);
        let backward_system = system
            .final_basis
            .vectors()
            .iter()
            .map(|v| out.weight(v).max(0.0))
            .collect();
        Ok(Self {
            conc,
            system,
            theta,
            backward_system,
            backward,
            splits,
        })
    }

    pub fn with_backward_system(mut self, weights: Vec<f64>) -> Result<Self> {
        let d = self.system.dim();
        if weights.len() != d {
            return Err(TrajectoryError::WeightLength {
                part: "system",
                expected: d,
                got: weights.len(),
            });
        }
        let s: f64 = weights.iter().sum();
        if weights.iter().any(|w| *w < 0.0) || (s - 1.0).abs() > tol::TRACE {
            return Err(TrajectoryError::InvalidWeights("system"));
        }
        self.backward_system = weights;
        Ok(self)
    }

    pub fn backward_maps(&self) -> &[KrausMap] {
        &self.backward
    }

    pub fn splits(&self) -> Result<&[MapSplit]> {
        self.splits
            .as_deref()
            .map_err(|e| TrajectoryError::SplitUnavailable(e.clone()))
    }

    pub fn outcome_count(&self) -> usize {
        let d = self.system.dim();
        self.conc.maps.iter().fold(d * d, |acc, m| acc.saturating_mul(m.len()))
    }

    /// `σ^S`, summed `σ^E` and, when available, the summed `Δφ`.
    pub fn ledger(&self, rec: &TrajectoryRecord) -> EntropyLedger {
        let pn = self.system.weights[rec.n];
        let pm = self.backward_system[rec.m];
        let sigma_s = pn.ln() - if pm > 0.0 { pm.ln() } else { f64::NEG_INFINITY };
        let sigma_e: f64 = rec
            .steps
            .iter()
            .zip(&self.conc.maps)
            .map(|(s, m)| m.op(s.op).sigma_e.expect("checked by the backward map"))
            .sum();
        let l = EntropyLedger::new(sigma_s, sigma_e, 0.0);
        match &self.splits {
            Ok(splits) => {
                let dphi = rec.steps.iter().zip(splits).map(|(s, sp)| sp.dphi[s.op]).sum();
                l.with_dphi(dphi)
            }
            Err(_) => l,
        }
    }

    fn leaf(&self, n: usize, steps: &[Step], amps: &Amplitudes, out: &mut Vec<TrajectoryRecord>) {
        let pn = self.system.weights[n];
        for (m, chi) in self.system.final_basis.vectors().iter().enumerate() {
            let p = pn * (chi.adjoint() * &amps.forward)[(0, 0)].norm_sqr();
            if p < PROB_CUTOFF {
                continue;
            }
            out.push(self.finish(n, steps.to_vec(), m, p, amps));
        }
    }

    fn finish(&self, n: usize, steps: Vec<Step>, m: usize, p: f64, amps: &Amplitudes) -> TrajectoryRecord {
        let theta = self.theta;
        let chi = self.system.final_basis.vector(m);
        let chi_r = theta.apply_vector(chi);
        let pm = self.backward_system[m];
        let mut rec = TrajectoryRecord::new(n, steps, m, p);
        rec.reverse_prob = Some(pm * (&amps.backward * &chi_r)[(0, 0)].norm_sqr());
        if let (Some(d), Some(dr)) = (&amps.dual, &amps.dual_reverse) {
            rec.dual_prob = Some(self.system.weights[n] * (chi.adjoint() * d)[(0, 0)].norm_sqr());
            rec.dual_reverse_prob = Some(pm * (dr * &chi_r)[(0, 0)].norm_sqr());
        }
        rec
    }

    fn start(&self, n: usize) -> Amplitudes {
        let psi = self.system.basis.vector(n).clone();
        let bra = self.theta.apply_vector(&psi).adjoint();
        let row = CMatrix::from_iterator(1, bra.len(), bra.iter().copied());
        let split = self.splits.is_ok();
        Amplitudes {
            forward: psi.clone(),
            backward: row.clone(),
            dual: split.then(|| psi.clone()),
            dual_reverse: split.then_some(row),
        }
    }

    fn advance(&self, l: usize, k: usize, a: &Amplitudes) -> Amplitudes {
        let m = &self.conc.maps[l].op(k).matrix;
        let b = &self.backward[l].op(k).matrix;
        let (dual, dual_reverse) = match &self.splits {
            Ok(s) => (
                a.dual.as_ref().map(|v| &s[l].dual.op(k).matrix * v),
                a.dual_reverse.as_ref().map(|r| r * &s[l].dual_reverse.op(k).matrix),
            ),
            Err(_) => (None, None),
        };
        Amplitudes {
            forward: m * &a.forward,
            backward: &a.backward * b,
            dual,
            dual_reverse,
        }
    }

    fn descend(&self, n: usize, l: usize, pn: f64, a: &Amplitudes, steps: &mut Vec<Step>, out: &mut Vec<TrajectoryRecord>) {
        if l == self.conc.len() {
            self.leaf(n, steps, a, out);
            return;
        }
        for (k, op) in self.conc.maps[l].ops().iter().enumerate() {
            let next = self.advance(l, k, a);
            if pn * next.forward.norm_squared() < PROB_CUTOFF {
                continue;
            }
            steps.push(Step { op: k, label: op.label });
            self.descend(n, l + 1, pn, &next, steps, out);
            steps.pop();
        }
    }
}

/// Amplitudes along a path: forward and dual act on kets, backward and
/// dual-reverse on bras, in the order of the reversed sequence.
#[derive(Debug, Clone)]
struct Amplitudes {
    forward: CVector,
    backward: CMatrix,
    dual: Option<CVector>,
    dual_reverse: Option<CMatrix>,
}

/// Enumerates every trajectory of a concatenation with all available
/// probabilities attached.
pub fn concatenation_distribution(c: &ConcatenationProcess) -> Result<Vec<TrajectoryRecord>> {
    let size = c.outcome_count();
    if size > ENUMERATION_CAP {
        return Err(TrajectoryError::CapExceeded {
            size,
            cap: ENUMERATION_CAP,
        });
    }
    let mut out = Vec::new();
    let mut steps = Vec::with_capacity(c.conc.len());
    for (n, &pn) in c.system.weights.iter().enumerate() {
        if pn < PROB_CUTOFF {
            continue;
        }
        let a = c.start(n);
        c.descend(n, 0, pn, &a, &mut steps, &mut out);
    }
    Ok(out)
}

fn pick<R: rand::Rng>(weights: &[f64], rng: &mut R) -> Option<usize> {
    WeightedIndex::new(weights).ok().map(|d| d.sample(rng))
}

/// Draws `count` trajectories by measuring and applying one operation per
/// map; probabilities of every process are attached.
pub fn sample_concatenation(c: &ConcatenationProcess, count: usize, seed: u64) -> Vec<TrajectoryRecord> {
    (0..count)
        .into_par_iter()
        .map(|i| {
            let mut rng = trajectory_rng(seed, i as u64);
            let n = pick(&c.system.weights, &mut rng).expect("initial weights sum to one");
            let mut a = c.start(n);
            let mut steps = Vec::with_capacity(c.conc.len());
            for (l, map) in c.conc.maps.iter().enumerate() {
                let cands: Vec<Amplitudes> = (0..map.len()).map(|k| c.advance(l, k, &a)).collect();
                let w: Vec<f64> = cands.iter().map(|x| x.forward.norm_squared()).collect();
                let k = pick(&w, &mut rng).expect("operations are complete");
                steps.push(Step { op: k, label: map.op(k).label });
                a = cands.into_iter().nth(k).expect("index in range");
            }
            let w: Vec<f64> = c
                .system
                .final_basis
                .vectors()
                .iter()
                .map(|chi| (chi.adjoint() * &a.forward)[(0, 0)].norm_sqr())
                .collect();
            let m = pick(&w, &mut rng).expect("final weights sum to one");
            let p = c.system.weights[n] * w[m];
            c.finish(n, steps, m, p, &a)
        })
        .collect()
}

