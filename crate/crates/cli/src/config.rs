use qtherm_core::C64;
use qtherm_models::cavity::CavityParams;
use qtherm_models::machine::MachineParams;
use qtherm_models::CnotParams;
use qtherm_trajectories::BackwardInit;
use serde_json::{Map, Value};
use std::fmt;

/// Command-line values that replace config fields.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub trajectories: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Enumerate,
    Sample,
    Integrate,
    Unravel,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::Enumerate => "enumerate",
            Mode::Sample => "sample",
            Mode::Integrate => "integrate",
            Mode::Unravel => "unravel",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        [Mode::Enumerate, Mode::Sample, Mode::Integrate, Mode::Unravel]
            .into_iter()
            .find(|m| m.name() == s)
    }

    fn is_stochastic(self) -> bool {
        matches!(self, Mode::Sample | Mode::Unravel)
    }

    fn is_dynamical(self) -> bool {
        matches!(self, Mode::Integrate | Mode::Unravel)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Output {
    Histogram,
    Rates,
    FtReport,
    Sweep,
}

impl Output {
    pub fn name(self) -> &'static str {
        match self {
            Output::Histogram => "histogram",
            Output::Rates => "rates",
            Output::FtReport => "ft_report",
            Output::Sweep => "sweep",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        [Output::Histogram, Output::Rates, Output::FtReport, Output::Sweep]
            .into_iter()
            .find(|o| o.name() == s)
    }
}

/// Initial state of a Lindblad model or of the machine concatenation.
#[derive(Debug, Clone, PartialEq)]
pub enum InitialState {
    Ground,
    Gibbs,
    Populations(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sweep {
    pub from: f64,
    pub to: f64,
    pub count: usize,
}

#[derive(Debug, Clone)]
pub enum ModelSpec {
    Cnot(CnotParams),
    ThreeLevel {
        params: MachineParams,
        initial: InitialState,
        sweep: Option<Sweep>,
    },
    Cavity {
        params: CavityParams,
        initial: InitialState,
    },
}

impl ModelSpec {
    pub fn name(&self) -> &'static str {
        match self {
            ModelSpec::Cnot(_) => "cnot",
            ModelSpec::ThreeLevel { .. } => "three_level",
            ModelSpec::Cavity { .. } => "cavity",
        }
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub model: ModelSpec,
    pub mode: Mode,
    pub trajectories: usize,
    pub seed: u64,
    pub dt: f64,
    pub t_final: f64,
    /// Machine steps in an enumerated or sampled concatenation.
    pub steps: usize,
    pub backward_init: BackwardInit,
    /// Histogram bin width for sampled runs; Freedman–Diaconis when absent.
    pub bin_width: Option<f64>,
    /// Integrator steps between rate rows.
    pub rates_every: usize,
    pub outputs: Vec<Output>,
    pub overrides: Overrides,
}

/// Every violation found in a config, with its JSON path.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigErrors(pub Vec<String>);

impl fmt::Display for ConfigErrors {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} configuration error(s)", self.0.len())?;
        for e in &self.0 {
            write!(f, "\n  {e}")?;
        }
        Ok(())
    }
}

impl std::error::Error for ConfigErrors {}

/// Collects violations while reading typed fields from one JSON object.
struct Reader<'a, 'e> {
    obj: &'a Map<String, Value>,
    path: &'static str,
    errors: &'e mut Vec<String>,
}

impl<'a, 'e> Reader<'a, 'e> {
    fn new(obj: &'a Map<String, Value>, path: &'static str, errors: &'e mut Vec<String>) -> Self {
        Self { obj, path, errors }
    }

    fn fail(&mut self, key: &str, msg: impl fmt::Display) {
        self.errors.push(format!("{}{key}: {msg}", self.path));
    }

    fn number(&mut self, key: &str) -> Option<f64> {
        match self.obj.get(key) {
            None | Some(Value::Null) => None,
            Some(v) => match v.as_f64() {
                Some(x) if x.is_finite() => Some(x),
                _ => {
                    self.fail(key, "expected a finite number");
                    None
                }
            },
        }
    }

    fn positive(&mut self, key: &str, default: Option<f64>) -> Option<f64> {
        let x = self.number(key).or(default)?;
        if x > 0.0 {
            Some(x)
        } else {
            self.fail(key, format!("{x} must be positive"));
            None
        }
    }

    fn non_negative(&mut self, key: &str) -> Option<f64> {
        let x = self.number(key)?;
        if x >= 0.0 {
            Some(x)
        } else {
            self.fail(key, format!("{x} must be non-negative"));
            None
        }
    }

    fn integer(&mut self, key: &str) -> Option<u64> {
        match self.obj.get(key) {
            None | Some(Value::Null) => None,
            Some(v) => match v.as_u64() {
                Some(n) => Some(n),
                None => {
                    self.fail(key, "expected a non-negative integer");
                    None
                }
            },
        }
    }

    fn string(&mut self, key: &str) -> Option<&'a str> {
        match self.obj.get(key) {
            None | Some(Value::Null) => None,
            Some(Value::String(s)) => Some(s.as_str()),
            Some(_) => {
                self.fail(key, "expected a string");
                None
            }
        }
    }

    fn numbers(&mut self, key: &str) -> Option<Vec<f64>> {
        let v = self.obj.get(key)?;
        let xs: Option<Vec<f64>> = v.as_array().and_then(|a| a.iter().map(Value::as_f64).collect());
        if xs.is_none() {
            self.fail(key, "expected an array of numbers");
        }
        xs
    }

    fn object(&mut self, key: &str) -> Option<&'a Map<String, Value>> {
        match self.obj.get(key) {
            None => None,
            Some(Value::Object(m)) => Some(m),
            Some(_) => {
                self.fail(key, "expected an object");
                None
            }
        }
    }

    fn require<T>(&mut self, key: &str, v: Option<T>, why: &str) -> Option<T> {
        if v.is_none() && !self.obj.contains_key(key) {
            self.fail(key, format!("missing (required {why})"));
        }
        v
    }

    fn unknown_keys(&mut self, allowed: &[&str]) {
        let extra: Vec<String> = self.obj.keys().filter(|k| !allowed.contains(&k.as_str())).cloned().collect();
        for k in extra {
            self.fail(&k, "unknown key");
        }
    }
}

/// Three values from a number (all equal) or a three-element array.
fn triple(r: &mut Reader, key: &str) -> Option<[f64; 3]> {
    match r.obj.get(key) {
        None => None,
        Some(Value::Array(a)) if a.len() == 3 => {
            let xs: Option<Vec<f64>> = a.iter().map(Value::as_f64).collect();
            match xs {
                Some(x) => Some([x[0], x[1], x[2]]),
                None => {
                    r.fail(key, "expected three numbers");
                    None
                }
            }
        }
        Some(v) => match v.as_f64() {
            Some(x) => Some([x; 3]),
            None => {
                r.fail(key, "expected a number or three numbers");
                None
            }
        },
    }
}

fn initial_state(r: &mut Reader, default: InitialState, dim: Option<usize>) -> InitialState {
    match r.obj.get("initial") {
        None => default,
        Some(Value::String(s)) => match s.as_str() {
            "ground" => InitialState::Ground,
            "gibbs" => InitialState::Gibbs,
            other => {
                r.fail("initial", format!("unknown state {other:?} (expected ground, gibbs or populations)"));
                default
            }
        },
        Some(_) => match r.numbers("initial") {
            Some(w) => {
                let ok = w.iter().all(|x| *x >= 0.0) && (w.iter().sum::<f64>() - 1.0).abs() <= 1e-10;
                if !ok {
                    r.fail("initial", "populations must be non-negative and sum to one");
                } else if let Some(d) = dim {
                    if w.len() != d {
                        r.fail("initial", format!("{} populations for dimension {d}", w.len()));
                    }
                }
                InitialState::Populations(w)
            }
            None => default,
        },
    }
}

fn backward_init(r: &mut Reader) -> BackwardInit {
    if let Some(Value::Object(m)) = r.obj.get("backward_init") {
        let system = m.get("system").and_then(Value::as_array).and_then(|a| a.iter().map(Value::as_f64).collect());
        let env = m.get("environment").and_then(Value::as_array).and_then(|a| a.iter().map(Value::as_f64).collect());
        return match (system, env) {
            (Some(system), Some(environment)) => BackwardInit::Custom {
                system,
                environment: vec![environment],
            },
            _ => {
                r.fail("backward_init", "custom weights need numeric arrays `system` and `environment`");
                BackwardInit::Product
            }
        };
    }
    match r.string("backward_init") {
        None | Some("product") => BackwardInit::Product,
        Some("correlated") => BackwardInit::Correlated,
        Some("reset") => BackwardInit::Reset,
        Some(other) => {
            r.fail("backward_init", format!("unknown choice {other:?} (expected correlated, product, reset or weights)"));
            BackwardInit::Product
        }
    }
}

fn cnot_spec(params: &Map<String, Value>, errors: &mut Vec<String>) -> Option<ModelSpec> {
    let mut r = Reader::new(params, "params.", errors);
    r.unknown_keys(&["alpha", "beta_eps", "epsilon"]);
    let alpha = r.number("alpha");
    let alpha = r.require("alpha", alpha, "for cnot");
    let beta_eps = r.non_negative("beta_eps");
    let beta_eps = r.require("beta_eps", beta_eps, "for cnot");
    let epsilon = r.positive("epsilon", Some(1.0));
    if let Some(a) = alpha {
        if !(0.0..=1.0).contains(&a) {
            r.fail("alpha", format!("{a} is outside [0, 1]"));
            return None;
        }
    }
    let mut p = CnotParams::new(alpha?, beta_eps?).with_epsilon(epsilon?);
    if alpha == Some(0.0) {
        p = p.with_initial_basis(qtherm_core::ProjectiveBasis::computational(2));
    }
    Some(ModelSpec::Cnot(p))
}

fn three_level_spec(params: &Map<String, Value>, errors: &mut Vec<String>) -> Option<ModelSpec> {
    let mut r = Reader::new(params, "params.", errors);
    r.unknown_keys(&["hw1", "hw2", "beta", "beta1", "gamma", "initial", "beta1_sweep"]);
    let hw1 = r.positive("hw1", Some(1.0));
    let hw2 = r.positive("hw2", Some(1.5));
    let mut beta = triple(&mut r, "beta").unwrap_or([9.0, 0.5, 4.0]);
    if let Some(b1) = r.positive("beta1", None) {
        beta[0] = b1;
    }
    let gamma = triple(&mut r, "gamma").unwrap_or([0.05; 3]);
    let initial = initial_state(&mut r, InitialState::Ground, Some(3));
    if initial == InitialState::Gibbs {
        r.fail("initial", "the machine has no single temperature; use ground or populations");
    }
    let sweep = r.object("beta1_sweep").and_then(|s| {
        let mut sr = Reader::new(s, "params.beta1_sweep.", &mut *r.errors);
        let from = sr.positive("from", None);
        let from = sr.require("from", from, "for a sweep");
        let to = sr.positive("to", None);
        let to = sr.require("to", to, "for a sweep");
        let count = sr.integer("count");
        let count = sr.require("count", count, "for a sweep");
        if matches!(count, Some(c) if c < 2) {
            sr.fail("count", "a sweep needs at least two points");
            return None;
        }
        Some(Sweep {
            from: from?,
            to: to?,
            count: count? as usize,
        })
    });
    let params = match MachineParams::unordered(hw1?, hw2?, beta, gamma) {
        Ok(p) => p,
        Err(e) => {
            r.fail("", e);
            return None;
        }
    };
    Some(ModelSpec::ThreeLevel { params, initial, sweep })
}

fn cavity_spec(params: &Map<String, Value>, errors: &mut Vec<String>) -> Option<ModelSpec> {
    let mut r = Reader::new(params, "params.", errors);
    r.unknown_keys(&["omega", "epsilon", "epsilon_phase", "gamma0", "beta", "n_max", "initial"]);
    let omega = r.positive("omega", Some(1.0));
    let eps = r.non_negative("epsilon").unwrap_or(0.02);
    let phase = r.number("epsilon_phase").unwrap_or(0.0);
    let gamma0 = r.positive("gamma0", Some(0.01));
    let beta = r.positive("beta", Some(0.1));
    let n_max = r.integer("n_max");
    let (omega, gamma0, beta) = (omega?, gamma0?, beta?);
    let epsilon = C64::from_polar(eps, phase);
    let mut p = CavityParams {
        omega,
        epsilon,
        gamma0,
        beta,
        n_max: 0,
    };
    let needed = p.recommended_n_max();
    p.n_max = n_max.map_or(needed, |n| n as usize);
    if p.n_max < needed {
        r.fail(
            "n_max",
            format!("truncation at {} levels is too small for |α| = {:.6}: at least {needed} needed", p.n_max, p.alpha().norm()),
        );
        return None;
    }
    if let Err(e) = p.validate() {
        r.fail("", e);
        return None;
    }
    let initial = initial_state(&mut r, InitialState::Gibbs, Some(p.dim()));
    Some(ModelSpec::Cavity { params: p, initial })
}

fn apply_overrides(root: &mut Map<String, Value>, o: &Overrides) {
    if o.seed.is_none() && o.trajectories.is_none() {
        return;
    }
    let run = root.entry("run").or_insert_with(|| Value::Object(Map::new()));
    if let Value::Object(run) = run {
        if let Some(s) = o.seed {
            run.insert("seed".into(), Value::from(s));
        }
        if let Some(n) = o.trajectories {
            run.insert("trajectories".into(), Value::from(n));
        }
    }
}

/// Parses and validates a JSON config, reporting every violation at once.
pub fn parse_config(text: &str, overrides: &Overrides) -> Result<ExperimentConfig, ConfigErrors> {
    let value: Value = serde_json::from_str(text).map_err(|e| ConfigErrors(vec![format!("malformed JSON: {e}")]))?;
    let Value::Object(mut root) = value else {
        return Err(ConfigErrors(vec!["top level must be an object".into()]));
    };
    apply_overrides(&mut root, overrides);
    let empty = Map::new();
    let mut errors = Vec::new();
    let mut top = Reader::new(&root, "", &mut errors);
    top.unknown_keys(&["model", "params", "run", "outputs"]);
    let model_name = top.string("model");
    let model_name = top.require("model", model_name, "at the top level");
    let params = top.object("params").unwrap_or(&empty);
    let run = top.object("run");
    let run = top.require("run", run, "at the top level").unwrap_or(&empty);
    let outputs_raw = root.get("outputs");

    let model = match model_name {
        Some("cnot") => cnot_spec(params, &mut errors),
        Some("three_level") => three_level_spec(params, &mut errors),
        Some("cavity") => cavity_spec(params, &mut errors),
        Some(other) => {
            errors.push(format!("model: unknown model {other:?} (expected cnot, three_level or cavity)"));
            None
        }
        None => None,
    };

    let mut r = Reader::new(run, "run.", &mut errors);
    r.unknown_keys(&[
        "mode",
        "trajectories",
        "seed",
        "dt",
        "t_final",
        "steps",
        "backward_init",
        "bin_width",
        "rates_every",
    ]);
    let mode_name = r.string("mode");
    let mode = match r.require("mode", mode_name, "in run") {
        Some(s) => {
            let m = Mode::parse(s);
            if m.is_none() {
                r.fail("mode", format!("unknown mode {s:?} (expected enumerate, sample, integrate or unravel)"));
            }
            m
        }
        None => None,
    };
    let trajectories = r.integer("trajectories");
    let seed = r.integer("seed");
    let dt = r.positive("dt", None);
    let t_final = r.positive("t_final", None);
    let steps = r.integer("steps");
    let backward = backward_init(&mut r);
    let bin_width = r.positive("bin_width", None);
    let rates_every = r.integer("rates_every").unwrap_or(1);
    if rates_every == 0 {
        r.fail("rates_every", "must be at least 1");
    }

    let machine = model_name == Some("three_level");
    let cnot = model_name == Some("cnot");
    if let Some(mode) = mode {
        if mode.is_stochastic() {
            r.require("trajectories", trajectories, &format!("for {}", mode.name()));
            r.require("seed", seed, &format!("for {}", mode.name()));
            if trajectories == Some(0) {
                r.fail("trajectories", "must be at least 1");
            }
        }
        if mode.is_dynamical() {
            r.require("dt", dt, &format!("for {}", mode.name()));
            r.require("t_final", t_final, &format!("for {}", mode.name()));
            if cnot {
                r.fail("mode", format!("{} needs a Lindblad model (three_level or cavity)", mode.name()));
            }
        } else {
            if model_name == Some("cavity") {
                r.fail("mode", format!("{} needs a finite process (cnot or three_level)", mode.name()));
            }
            if machine {
                r.require("dt", dt, "for a machine concatenation");
                r.require("steps", steps, "for a machine concatenation");
                if steps == Some(0) {
                    r.fail("steps", "must be at least 1");
                }
            }
        }
    }
    if !cnot && backward != BackwardInit::Product && run.contains_key("backward_init") {
        r.fail("backward_init", "only the cnot process takes a backward state");
    }

    let mut outputs = Vec::new();
    match outputs_raw.map(|v| v.as_array().map(|a| a.iter().map(Value::as_str).collect::<Vec<_>>())) {
        None => errors.push("outputs: missing (required at the top level)".into()),
        Some(None) => errors.push("outputs: expected an array of names".into()),
        Some(Some(names)) => {
            for n in names {
                match n.and_then(Output::parse) {
                    Some(o) if !outputs.contains(&o) => outputs.push(o),
                    Some(_) => {}
                    None => errors.push(format!(
                        "outputs: unknown output {:?} (expected histogram, rates, ft_report or sweep)",
                        n.unwrap_or("<non-string>")
                    )),
                }
            }
            if outputs.is_empty() && errors.is_empty() {
                errors.push("outputs: at least one output is required".into());
            }
        }
    }
    outputs.sort();
    if let Some(mode) = mode {
        for o in &outputs {
            let ok = match o {
                Output::Histogram | Output::FtReport => mode != Mode::Integrate,
                Output::Rates => mode.is_dynamical(),
                Output::Sweep => matches!(&model, Some(ModelSpec::ThreeLevel { sweep: Some(_), .. })),
            };
            if !ok && model.is_some() {
                let what = if *o == Output::Sweep {
                    "needs three_level with params.beta1_sweep".to_string()
                } else {
                    format!("is not produced in {} mode", mode.name())
                };
                errors.push(format!("outputs: {} {what}", o.name()));
            }
        }
    }

    if !errors.is_empty() {
        return Err(ConfigErrors(errors));
    }
    Ok(ExperimentConfig {
        model: model.expect("validated"),
        mode: mode.expect("validated"),
        trajectories: trajectories.unwrap_or(0) as usize,
        seed: seed.unwrap_or(0),
        dt: dt.unwrap_or(0.0),
        t_final: t_final.unwrap_or(0.0),
        steps: steps.unwrap_or(0) as usize,
        backward_init: backward,
        bin_width,
        rates_every: rates_every as usize,
        outputs,
        overrides: overrides.clone(),
    })
}
