use crate::config::{ExperimentConfig, InitialState, Mode, ModelSpec, Output};
use crate::error::{CliError, Result};
use qtherm_channels::concatenate;
use qtherm_core::{DensityOperator, ProjectiveBasis};
use qtherm_lindblad::{entropy_rates, integrate, jump_counts, unravel, unraveling_ledgers, LindbladModel, Rk4, UnravelConfig};
use qtherm_models::cavity::{build_cavity, cavity_series, gibbs_state, CavityParams};
use qtherm_models::machine::{beta1_sweep, build_machine, linspace, machine_heat_flows, machine_step_map, MachineParams};
use qtherm_models::{build_cnot, CnotParams};
use qtherm_trajectories::{
    bipartite_split, concatenation_distribution, reduced_invariant_state, sample_concatenation, sample_trajectories,
    verify_integral_ft, BackwardInit, ConcatenationProcess, EntropyLedger, Enumeration, IntegralFt, Part,
    TrajectoryRecord, Which,
};

/// Values closer than this are one histogram atom.
pub const MERGE_TOL: f64 = 1e-12;

/// `(value, probability)` rows of an entropy histogram.
pub type Histogram = Vec<(f64, f64)>;

/// One integral-theorem entry of the report.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FtEntry {
    pub value: Option<f64>,
    pub stderr: Option<f64>,
    pub available: bool,
}

impl FtEntry {
    fn missing() -> Self {
        Self {
            value: None,
            stderr: None,
            available: false,
        }
    }

    fn from_ft(ft: &IntegralFt) -> Self {
        Self {
            value: Some(ft.value),
            stderr: Some(ft.stderr),
            available: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FtReport {
    pub total: FtEntry,
    pub adiabatic: FtEntry,
    pub nonadiabatic: FtEntry,
    /// `<Δ_i s>`.
    pub mean_total: f64,
    pub trajectories: usize,
    /// Trajectories with an impossible reverse.
    pub infinite: usize,
}

/// `[t, Ṡ, Ṡ_i, Ṡ_a, Ṡ_na, Ẇ, Q̇, U̇, Ẋ]`.
pub type RatesRow = [f64; 9];

/// `[β_1, β'_1, β'_2, β'_3, Q̇_1, Q̇_2, Q̇_3, p_g, p_A, p_B]`.
pub type SweepRow = [f64; 10];

/// Everything a run produces before anything is written.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ResultBundle {
    /// File stem and rows.
    pub histograms: Vec<(String, Histogram)>,
    pub ft: Option<FtReport>,
    pub rates: Option<Vec<RatesRow>>,
    pub sweep: Option<Vec<SweepRow>>,
    /// Deterministic step and sampling diagnostics.
    pub diagnostics: Vec<(String, f64)>,
}

/// Groups equal values within [`MERGE_TOL`], in increasing order.
pub fn exact_histogram(samples: &[(f64, f64)]) -> Histogram {
    let mut v: Vec<(f64, f64)> = samples.iter().copied().filter(|(x, _)| x.is_finite()).collect();
    v.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut out: Histogram = Vec::new();
    for (x, p) in v {
        match out.last_mut() {
            Some((x0, p0)) if (x - *x0).abs() <= MERGE_TOL => *p0 += p,
            _ => out.push((x, p)),
        }
    }
    out
}

/// `2 IQR n^{-1/3}`, or `None` when the spread vanishes.
pub fn freedman_diaconis(sorted: &[f64]) -> Option<f64> {
    let n = sorted.len();
    if n < 2 {
        return None;
    }
    let q = |f: f64| sorted[((n - 1) as f64 * f).round() as usize];
    let w = 2.0 * (q(0.75) - q(0.25)) / (n as f64).cbrt();
    (w > 0.0).then_some(w)
}

/// Equal-weight samples binned at `width` (bin centres), with exact grouping
/// as the fallback for atoms.
pub fn binned_histogram(values: &[f64], width: Option<f64>) -> Histogram {
    let mut v: Vec<f64> = values.iter().copied().filter(|x| x.is_finite()).collect();
    if v.is_empty() {
        return Vec::new();
    }
    v.sort_by(f64::total_cmp);
    let weight = 1.0 / values.len() as f64;
    let Some(w) = width.or_else(|| freedman_diaconis(&v)) else {
        return exact_histogram(&v.iter().map(|&x| (x, weight)).collect::<Vec<_>>());
    };
    let lo = v[0];
    let mut out: Histogram = Vec::new();
    let mut current = usize::MAX;
    for x in v {
        let k = ((x - lo) / w).floor() as usize;
        if k == current {
            out.last_mut().expect("bin open").1 += weight;
        } else {
            out.push((lo + (k as f64 + 0.5) * w, weight));
            current = k;
        }
    }
    out
}

fn report(ledgers: &[EntropyLedger], weights: Option<&[f64]>) -> Result<FtReport> {
    let total = verify_integral_ft(ledgers, weights, Which::Total)?;
    let split = !ledgers.is_empty() && ledgers.iter().all(EntropyLedger::split_available);
    let part = |which| -> Result<FtEntry> {
        if split {
            Ok(FtEntry::from_ft(&verify_integral_ft(ledgers, weights, which)?))
        } else {
            Ok(FtEntry::missing())
        }
    };
    Ok(FtReport {
        total: FtEntry::from_ft(&total),
        adiabatic: part(Which::Adiabatic)?,
        nonadiabatic: part(Which::NonAdiabatic)?,
        mean_total: total.mean,
        trajectories: total.count,
        infinite: total.infinite,
    })
}

fn cnot_ledgers(p: &CnotParams, init: &BackwardInit, sampled: Option<(usize, u64)>) -> Result<Vec<(EntropyLedger, f64)>> {
    let proc = build_cnot(&p.clone().with_backward_init(init.clone()))?;
    let e = Enumeration::new(&proc)?;
    // correlated backward states carry no split
    let split = match init {
        BackwardInit::Correlated => None,
        _ => reduced_invariant_state(&proc).and_then(|pi| bipartite_split(&proc, &e, &pi)).ok(),
    };
    let records = match sampled {
        None => e.forward_records(),
        Some((n, seed)) => sample_trajectories(&proc, n, seed)?,
    };
    let weight = |r: &TrajectoryRecord| if sampled.is_some() { 1.0 / records.len() as f64 } else { r.prob };
    Ok(records
        .iter()
        .map(|r| {
            let l = match &split {
                Some(s) => e.split_ledger(r, s),
                None => e.ledger(r),
            };
            (l, weight(r))
        })
        .collect())
}

fn initial_density(initial: &InitialState, dim: usize, cavity: Option<&CavityParams>) -> Result<DensityOperator> {
    let w = match initial {
        InitialState::Ground => {
            let mut w = vec![0.0; dim];
            w[0] = 1.0;
            w
        }
        InitialState::Gibbs => match cavity {
            Some(p) => return Ok(gibbs_state(p)),
            None => return Err(CliError::numerical("cli", "no Gibbs state for this model")),
        },
        InitialState::Populations(w) => w.clone(),
    };
    Ok(DensityOperator::diagonal(&w)?)
}

fn machine_process(p: &MachineParams, initial: &InitialState, dt: f64, steps: usize) -> Result<ConcatenationProcess> {
    let m = build_machine(p)?;
    let map = machine_step_map(&m, dt)?;
    let conc = concatenate(vec![map; steps])?;
    let comp = ProjectiveBasis::computational(3);
    let s = Part::with_basis(initial_density(initial, 3, None)?, comp.clone(), comp, "system")?;
    Ok(ConcatenationProcess::new(conc, s)?)
}

fn machine_rates(m: &LindbladModel, rho0: &DensityOperator, cfg: &ExperimentConfig) -> Result<Vec<RatesRow>> {
    let steps = (cfg.t_final / cfg.dt).round().max(1.0) as usize;
    let mut rk = Rk4::new(m, rho0)?;
    let mut rows = Vec::with_capacity(steps / cfg.rates_every + 1);
    for n in 0..=steps {
        if n > 0 {
            rk.step(cfg.dt)?;
        }
        if n % cfg.rates_every == 0 || n == steps {
            let rho = rk.state();
            let r = entropy_rates(m, &rho, rk.time())?;
            let q: f64 = machine_heat_flows(m, &rho)?.iter().sum();
            rows.push([rk.time(), r.s_dot, r.s_dot_i, r.s_dot_a, r.s_dot_na, 0.0, q, q, 0.0]);
        }
    }
    Ok(rows)
}

fn cavity_rates(p: &CavityParams, m: &LindbladModel, rho0: &DensityOperator, cfg: &ExperimentConfig) -> Result<Vec<RatesRow>> {
    let series = cavity_series(p, m, rho0, cfg.t_final, cfg.dt, cfg.rates_every)?;
    Ok(series
        .iter()
        .filter_map(|s| {
            s.full.map(|f| {
                let e = s.energy;
                [s.t, f.s_dot, f.s_dot_i, s.s_dot_a, f.s_dot_na, e.w_dot, e.q_dot, e.u_dot, e.x_dot]
            })
        })
        .collect())
}

fn sweep_rows(p: &MachineParams, from: f64, to: f64, count: usize) -> Result<Vec<SweepRow>> {
    Ok(beta1_sweep(p, &linspace(from, to, count))?
        .iter()
        .map(|s| {
            let (v, q, pi) = (s.virtual_betas, s.flows, s.populations);
            [s.beta1, v[0], v[1], v[2], q[0], q[1], q[2], pi[0], pi[1], pi[2]]
        })
        .collect())
}

/// Executes a validated config; nothing is written here.
pub fn run(cfg: &ExperimentConfig) -> Result<ResultBundle> {
    let mut b = ResultBundle::default();
    let wants = |o: Output| cfg.outputs.contains(&o);
    match (&cfg.model, cfg.mode) {
        (ModelSpec::Cnot(p), Mode::Enumerate | Mode::Sample) => {
            let sampled = (cfg.mode == Mode::Sample).then_some((cfg.trajectories, cfg.seed));
            let pairs = cnot_ledgers(p, &cfg.backward_init, sampled)?;
            let (ledgers, weights): (Vec<_>, Vec<_>) = pairs.iter().cloned().unzip();
            if wants(Output::FtReport) {
                let w = sampled.is_none().then_some(weights.as_slice());
                b.ft = Some(report(&ledgers, w)?);
            }
            if wants(Output::Histogram) {
                let hist = |pairs: &[(EntropyLedger, f64)]| match sampled {
                    None => exact_histogram(&pairs.iter().map(|(l, w)| (l.delta_s, *w)).collect::<Vec<_>>()),
                    Some(_) => binned_histogram(&pairs.iter().map(|(l, _)| l.delta_s).collect::<Vec<_>>(), cfg.bin_width),
                };
                b.histograms.push(("histogram".into(), hist(&pairs)));
                if sampled.is_none() {
                    for (stem, init) in [("histogram_inclusive", BackwardInit::Correlated), ("histogram_non_inclusive", BackwardInit::Product)] {
                        b.histograms.push((stem.into(), hist(&cnot_ledgers(p, &init, None)?)));
                    }
                }
            }
            b.diagnostics.push(("trajectories".into(), ledgers.len() as f64));
        }
        (ModelSpec::ThreeLevel { params, initial, .. }, Mode::Enumerate | Mode::Sample) => {
            let c = machine_process(params, initial, cfg.dt, cfg.steps)?;
            let records = match cfg.mode {
                Mode::Enumerate => concatenation_distribution(&c)?,
                _ => sample_concatenation(&c, cfg.trajectories, cfg.seed),
            };
            let ledgers: Vec<EntropyLedger> = records.iter().map(|r| c.ledger(r)).collect();
            let weights: Vec<f64> = records.iter().map(|r| r.prob).collect();
            let enumerated = cfg.mode == Mode::Enumerate;
            if wants(Output::FtReport) {
                b.ft = Some(report(&ledgers, enumerated.then_some(weights.as_slice()))?);
            }
            if wants(Output::Histogram) {
                let h = if enumerated {
                    exact_histogram(&ledgers.iter().zip(&weights).map(|(l, w)| (l.delta_s, *w)).collect::<Vec<_>>())
                } else {
                    binned_histogram(&ledgers.iter().map(|l| l.delta_s).collect::<Vec<_>>(), cfg.bin_width)
                };
                b.histograms.push(("histogram".into(), h));
            }
            b.diagnostics.push(("trajectories".into(), ledgers.len() as f64));
        }
        (ModelSpec::ThreeLevel { params, initial, .. }, Mode::Integrate | Mode::Unravel) => {
            let m = build_machine(params)?;
            let rho0 = initial_density(initial, 3, None)?;
            if wants(Output::Rates) {
                b.rates = Some(machine_rates(&m, &rho0, cfg)?);
            }
            if cfg.mode == Mode::Unravel {
                unravel_into(&mut b, &m, &rho0, cfg)?;
            }
        }
        (ModelSpec::Cavity { params, initial }, Mode::Integrate | Mode::Unravel) => {
            let m = build_cavity(params)?;
            let rho0 = initial_density(initial, params.dim(), Some(params))?;
            if wants(Output::Rates) {
                b.rates = Some(cavity_rates(params, &m, &rho0, cfg)?);
            }
            if cfg.mode == Mode::Unravel {
                unravel_into(&mut b, &m, &rho0, cfg)?;
            }
        }
        (model, mode) => {
            return Err(CliError::numerical("cli", format!("{} does not run in {} mode", model.name(), mode.name())));
        }
    }
    if let ModelSpec::ThreeLevel { params, sweep: Some(s), .. } = &cfg.model {
        if wants(Output::Sweep) {
            b.sweep = Some(sweep_rows(params, s.from, s.to, s.count)?);
        }
    }
    if let Some(r) = &b.rates {
        b.diagnostics.push(("rate_rows".into(), r.len() as f64));
        b.diagnostics.push(("dt".into(), cfg.dt));
    }
    Ok(b)
}

fn unravel_into(b: &mut ResultBundle, m: &LindbladModel, rho0: &DensityOperator, cfg: &ExperimentConfig) -> Result<()> {
    let comp = ProjectiveBasis::computational(m.dim());
    let ucfg = UnravelConfig::new(cfg.t_final, cfg.dt, cfg.trajectories, cfg.seed, comp.clone()).with_initial_basis(comp);
    let u = unravel(m, rho0, &ucfg)?;
    let fin = integrate(m, rho0, &[cfg.t_final], u.dt)?.pop().expect("one checkpoint");
    let ledgers = unraveling_ledgers(&u, &fin.populations())?;
    if cfg.outputs.contains(&Output::FtReport) {
        b.ft = Some(report(&ledgers, None)?);
    }
    if cfg.outputs.contains(&Output::Histogram) {
        let values: Vec<f64> = ledgers.iter().map(|l| l.delta_s).collect();
        b.histograms.push(("histogram".into(), binned_histogram(&values, cfg.bin_width)));
    }
    b.diagnostics.push(("trajectories".into(), u.trajectories.len() as f64));
    b.diagnostics.push(("unravel_dt".into(), u.dt));
    b.diagnostics.push(("coarse_step".into(), if u.coarse { 1.0 } else { 0.0 }));
    let jumps: usize = jump_counts(&u, m.jumps().len()).iter().sum();
    b.diagnostics.push(("jumps".into(), jumps as f64));
    Ok(())
}
