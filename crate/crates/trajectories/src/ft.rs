use crate::bipartite::{bipartite_split, reduced_invariant_state, Enumeration};
use crate::error::{Result, TrajectoryError};
use crate::process::BipartiteProcess;
use crate::record::{log_ratio, EntropyLedger, TrajectoryRecord, Which};
use crate::TOL_FT;
use serde::Serialize;

/// `<exp(-Δ)>` over enumerated or sampled trajectories.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IntegralFt {
    pub which: Which,
    pub value: f64,
    /// Zero under enumeration.
    pub stderr: f64,
    /// `<Δ>`; the second-law corollary requires it to be non-negative.
    pub mean: f64,
    pub mean_stderr: f64,
    pub count: usize,
    /// Trajectories with `P > 0` and `P̃ = 0`, which break the theorem.
    pub infinite: usize,
}

impl IntegralFt {
    /// `|value - 1|` in units of the standard error; infinite for an exact
    /// mismatch under enumeration.
    pub fn deviation_sigmas(&self) -> f64 {
        let d = (self.value - 1.0).abs();
        if self.stderr > 0.0 {
            d / self.stderr
        } else if d == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    }
}

/// With `weights` the ledgers are an enumeration weighted by `P(γ)`;
/// without, they are equally weighted Monte Carlo samples.
pub fn verify_integral_ft(ledgers: &[EntropyLedger], weights: Option<&[f64]>, which: Which) -> Result<IntegralFt> {
    if ledgers.is_empty() {
        return Err(TrajectoryError::Empty);
    }
    if let Some(w) = weights {
        if w.len() != ledgers.len() {
            return Err(TrajectoryError::WeightLength {
                part: "trajectories",
                expected: ledgers.len(),
                got: w.len(),
            });
        }
    }
    let mut vals = Vec::with_capacity(ledgers.len());
    let mut infinite = 0;
    for l in ledgers {
        let v = l
            .value(which)
            .ok_or_else(|| TrajectoryError::SplitUnavailable(format!("{} entropy is not defined", which.name())))?;
        if v.is_infinite() && v > 0.0 {
            infinite += 1;
        }
        vals.push(v);
    }
    let (value, stderr, mean, mean_stderr) = match weights {
        Some(w) => {
            let value = vals.iter().zip(w).map(|(v, p)| p * (-v).exp()).sum();
            let mean = vals.iter().zip(w).map(|(v, p)| p * v).sum();
            (value, 0.0, mean, 0.0)
        }
        None => {
            let e: Vec<f64> = vals.iter().map(|v| (-v).exp()).collect();
            let (value, stderr) = mean_and_stderr(&e);
            let (mean, mean_stderr) = mean_and_stderr(&vals);
            (value, stderr, mean, mean_stderr)
        }
    };
    Ok(IntegralFt {
        which,
        value,
        stderr,
        mean,
        mean_stderr,
        count: ledgers.len(),
        infinite,
    })
}

pub(crate) fn mean_and_stderr(x: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    if x.len() < 2 {
        return (mean, 0.0);
    }
    let var = x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Overrun {
    pub index: usize,
    pub which: Which,
    pub residual: f64,
}

/// Residuals of the detailed theorems `ln(P/P̃) = Δ_i s`,
/// `ln(P/P_D) = Δ_i s^a` and `ln(P/P̃_D) = Δ_i s^na`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DetailedFtReport {
    pub records: usize,
    pub max_total: f64,
    pub max_adiabatic: Option<f64>,
    pub max_nonadiabatic: Option<f64>,
    /// Trajectories with `P̃ = 0`, skipped in the residuals.
    pub infinite: usize,
    pub tolerance: f64,
    pub overruns: Vec<Overrun>,
}

impl DetailedFtReport {
    pub fn passed(&self) -> bool {
        self.overruns.is_empty()
    }

    pub fn max_residual(&self) -> f64 {
        [Some(self.max_total), self.max_adiabatic, self.max_nonadiabatic]
            .into_iter()
            .flatten()
            .fold(0.0, f64::max)
    }
}

pub fn detailed_report(records: &[TrajectoryRecord], ledgers: &[EntropyLedger], tolerance: f64) -> DetailedFtReport {
    let mut rep = DetailedFtReport {
        records: records.len(),
        max_total: 0.0,
        max_adiabatic: None,
        max_nonadiabatic: None,
        infinite: 0,
        tolerance,
        overruns: Vec::new(),
    };
    let check = |index: usize, which: Which, lhs: f64, rhs: f64, slot: &mut f64, overruns: &mut Vec<Overrun>| {
        let residual = (lhs - rhs).abs();
        *slot = slot.max(residual);
        if !(residual <= tolerance) {
            overruns.push(Overrun { index, which, residual });
        }
    };
    for (i, (rec, l)) in records.iter().zip(ledgers).enumerate() {
        if let Some(r) = rec.reverse_prob {
            if r <= 0.0 || l.is_infinite() {
                rep.infinite += 1;
            } else {
                check(i, Which::Total, log_ratio(rec.prob, r), l.delta_s, &mut rep.max_total, &mut rep.overruns);
            }
        }
        if let (Some(pd), Some(a)) = (rec.dual_prob, l.delta_s_a) {
            let slot = rep.max_adiabatic.get_or_insert(0.0);
            check(i, Which::Adiabatic, log_ratio(rec.prob, pd), a, slot, &mut rep.overruns);
        }
        if let (Some(prd), Some(na)) = (rec.dual_reverse_prob, l.delta_s_na) {
            let slot = rep.max_nonadiabatic.get_or_insert(0.0);
            check(i, Which::NonAdiabatic, log_ratio(rec.prob, prd), na, slot, &mut rep.overruns);
        }
    }
    rep
}

/// Enumerates a bipartite process and checks every detailed theorem that
/// applies; the split is included when the reduced map admits it.
pub fn verify_detailed_ft(p: &BipartiteProcess) -> Result<DetailedFtReport> {
    let e = Enumeration::new(p)?;
    let mut records = e.forward_records();
    let split = reduced_invariant_state(p).and_then(|pi| bipartite_split(p, &e, &pi)).ok();
    let ledgers: Vec<EntropyLedger> = match &split {
        Some(s) => {
            e.attach_duals(p, s, &mut records);
            records.iter().map(|r| e.split_ledger(r, s)).collect()
        }
        None => records.iter().map(|r| e.ledger(r)).collect(),
    };
    Ok(detailed_report(&records, &ledgers, TOL_FT))
}
