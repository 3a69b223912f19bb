use qtherm_cli::emit::{HISTOGRAM_HEADER, RATES_HEADER, SWEEP_HEADER};
use qtherm_cli::run::{binned_histogram, exact_histogram, freedman_diaconis, MERGE_TOL};
use qtherm_cli::*;
use qtherm_core::C64;
use qtherm_models::cavity::{cavity_transients, gibbs_state, CavityParams};
use serde_json::Value;
use std::path::Path;
use std::process::Command;

const CNOT: &str = r#"{"model":"cnot","params":{"alpha":0.8,"beta_eps":2.5},"run":{"mode":"enumerate"},"outputs":["histogram","ft_report"]}"#;

fn qtherm(config: &str, dir: &Path, extra: &[&str]) -> (i32, String) {
    let cfg = dir.join("config.json");
    std::fs::write(&cfg, config).unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_qtherm"))
        .arg("run")
        .arg("--config")
        .arg(&cfg)
        .arg("--out")
        .arg(dir.join("out"))
        .args(extra)
        .output()
        .unwrap();
    (out.status.code().unwrap(), String::from_utf8(out.stderr).unwrap())
}

fn read(dir: &Path, name: &str) -> String {
    std::fs::read_to_string(dir.join("out").join(name)).unwrap()
}

fn json(dir: &Path, name: &str) -> Value {
    serde_json::from_str(&read(dir, name)).unwrap()
}

/// Data rows of a CSV file after checking its header.
fn rows(text: &str, header: &str) -> Vec<Vec<f64>> {
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some(header));
    lines.map(|l| l.split(',').map(|c| c.parse().unwrap()).collect()).collect()
}

fn errors(text: &str) -> Vec<String> {
    parse_config(text, &Overrides::default()).unwrap_err().0
}

#[test]
fn reference_config_is_valid() {
    let cfg = parse_config(CNOT, &Overrides::default()).unwrap();
    assert_eq!(cfg.model.name(), "cnot");
    assert_eq!(cfg.mode, Mode::Enumerate);
    assert_eq!(cfg.outputs, vec![Output::Histogram, Output::FtReport]);
}

#[test]
fn violations_are_aggregated() {
    let e = errors("{}");
    for key in ["model", "run", "run.mode", "outputs"] {
        assert!(e.iter().any(|m| m.starts_with(&format!("{key}: missing"))), "{key}: {e:?}");
    }

    let e = errors(r#"{"model":"cavity","params":{"n_max":4},"run":{"mode":"integrate","dt":0.01,"t_final":1},"outputs":["rates"]}"#);
    assert_eq!(e.len(), 1);
    assert!(e[0].starts_with("params.n_max") && e[0].contains("too small"), "{e:?}");

    let e = errors(r#"{"model":"qutrit","run":{"mode":"walk","dt":-1},"outputs":["plot"],"extra":1}"#);
    assert_eq!(e.len(), 5, "{e:?}");
    assert!(e.iter().any(|m| m.contains("unknown model")));
    assert!(e.iter().any(|m| m.contains("unknown mode")));
    assert!(e.iter().any(|m| m.starts_with("run.dt")));
    assert!(e.iter().any(|m| m.contains("unknown output")));
    assert!(e.iter().any(|m| m.starts_with("extra: unknown key")));

    let e = errors(r#"{"model":"cnot","params":{"alpha":1.5},"run":{"mode":"integrate"},"outputs":["rates"]}"#);
    assert!(e.iter().any(|m| m.starts_with("params.beta_eps: missing")));
    assert!(e.iter().any(|m| m.starts_with("params.alpha") && m.contains("[0, 1]")));
    assert!(e.iter().any(|m| m.starts_with("run.mode") && m.contains("Lindblad")));

    let e = errors(r#"{"model":"three_level","run":{"mode":"sample"},"outputs":["rates","sweep"]}"#);
    for key in ["run.trajectories", "run.seed", "run.dt", "run.steps"] {
        assert!(e.iter().any(|m| m.starts_with(key)), "{key}: {e:?}");
    }
    assert!(e.iter().any(|m| m.contains("rates is not produced")));
    assert!(e.iter().any(|m| m.contains("sweep needs")));

    assert!(errors("[1, 2]")[0].contains("object"));
    assert!(errors("{").remove(0).contains("malformed"));
}

#[test]
fn overrides_fill_required_fields() {
    let text = r#"{"model":"cnot","params":{"alpha":0.5,"beta_eps":1},"run":{"mode":"sample"},"outputs":["ft_report"]}"#;
    assert_eq!(errors(text).len(), 2);
    let o = Overrides {
        seed: Some(4),
        trajectories: Some(100),
    };
    let cfg = parse_config(text, &o).unwrap();
    assert_eq!((cfg.seed, cfg.trajectories), (4, 100));
    assert_eq!(cfg.overrides, o);
}

#[test]
fn cnot_enumeration_writes_exact_results() {
    let dir = tempfile::tempdir().unwrap();
    let (code, _) = qtherm(CNOT, dir.path(), &[]);
    assert_eq!(code, 0);
    for stem in ["histogram", "histogram_inclusive", "histogram_non_inclusive"] {
        let h = rows(&read(dir.path(), &format!("{stem}.csv")), HISTOGRAM_HEADER);
        let total: f64 = h.iter().map(|r| r[1]).sum();
        assert!((total - 1.0).abs() <= 1e-12, "{stem}");
        assert!(h.windows(2).all(|w| w[1][0] - w[0][0] > MERGE_TOL));
        // the exponential average of the atoms is one
        let ft: f64 = h.iter().map(|r| r[1] * (-r[0]).exp()).sum();
        assert!((ft - 1.0).abs() <= 1e-12, "{stem}");
    }
    let ft = json(dir.path(), "ft_report.json");
    for key in ["integral_total", "integral_adiabatic", "integral_nonadiabatic"] {
        let e = &ft[key];
        assert_eq!(e["available"], Value::Bool(true));
        assert!((e["value"].as_f64().unwrap() - 1.0).abs() <= 1e-12);
        assert_eq!(e["stderr"].as_f64(), Some(0.0));
    }

    let hash = sha256_hex(CNOT.as_bytes());
    assert_eq!(ft["config_sha256"], Value::String(hash.clone()));
    let prov = json(dir.path(), "provenance.json");
    assert_eq!(prov["config_sha256"], Value::String(hash));
    assert_eq!(prov["version"], Value::String(env!("CARGO_PKG_VERSION").into()));
    let files = prov["files"].as_array().unwrap();
    assert_eq!(files.len(), 4);
    for f in files {
        let body = read(dir.path(), f["name"].as_str().unwrap());
        assert_eq!(f["sha256"].as_str().unwrap(), sha256_hex(body.as_bytes()));
    }
}

#[test]
fn numbers_carry_seventeen_digits() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(qtherm(CNOT, dir.path(), &[]).0, 0);
    let text = read(dir.path(), "histogram.csv");
    assert!(!text.contains('\r') && text.ends_with('\n'));
    for cell in text.lines().skip(1).flat_map(|l| l.split(',')) {
        let mantissa = cell.trim_start_matches('-').split('e').next().unwrap();
        assert_eq!(mantissa.len(), 18, "{cell}");
        assert_eq!(mantissa.as_bytes()[1], b'.');
    }
}

#[test]
fn sampled_runs_are_reproducible() {
    let text = r#"{"model":"cnot","params":{"alpha":0.8,"beta_eps":2.5},"run":{"mode":"sample","trajectories":4000,"seed":1,"backward_init":"reset"},"outputs":["histogram","ft_report"]}"#;
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let c = tempfile::tempdir().unwrap();
    assert_eq!(qtherm(text, a.path(), &["--seed", "5"]).0, 0);
    assert_eq!(qtherm(text, b.path(), &["--seed", "5"]).0, 0);
    assert_eq!(qtherm(text, c.path(), &["--seed", "6", "--trajectories", "3000"]).0, 0);
    for name in ["histogram.csv", "ft_report.json", "provenance.json"] {
        assert_eq!(read(a.path(), name), read(b.path(), name), "{name}");
    }
    assert_ne!(read(a.path(), "histogram.csv"), read(c.path(), "histogram.csv"));
    let prov = json(c.path(), "provenance.json");
    assert_eq!(prov["seed"].as_u64(), Some(6));
    assert_eq!(prov["overrides"]["seed"].as_u64(), Some(6));
    assert_eq!(prov["overrides"]["trajectories"].as_u64(), Some(3000));
    let ft = json(c.path(), "ft_report.json");
    assert_eq!(ft["trajectories"].as_u64(), Some(3000));
    let value = ft["integral_total"]["value"].as_f64().unwrap();
    let stderr = ft["integral_total"]["stderr"].as_f64().unwrap();
    assert!((value - 1.0).abs() <= 3.0 * stderr, "{value} ± {stderr}");
}

#[test]
fn machine_runs_emit_rates_and_sweeps() {
    let text = r#"{"model":"three_level","params":{"beta1":7,"beta1_sweep":{"from":0.5,"to":14,"count":28}},
        "run":{"mode":"integrate","dt":0.5,"t_final":50,"rates_every":10},"outputs":["rates","sweep"]}"#;
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(qtherm(text, dir.path(), &[]).0, 0);
    let rates = rows(&read(dir.path(), "rates.csv"), RATES_HEADER);
    assert_eq!(rates.len(), 11);
    for r in &rates[1..] {
        assert!(r[2] >= -1e-9 && r[3] >= -1e-9 && r[4] >= -1e-9);
        assert!((r[2] - r[3] - r[4]).abs() <= 1e-10);
        assert_eq!(r[5], 0.0);
        assert_eq!(r[6], r[7]);
    }
    let sweep = rows(&read(dir.path(), "sweep.csv"), SWEEP_HEADER);
    assert_eq!(sweep.len(), 28);
    for r in &sweep {
        // refrigeration below the crossing, heating above
        assert_eq!(r[4].signum(), (9.25 - r[0]).signum());
        assert!((r[7] + r[8] + r[9] - 1.0).abs() <= 1e-12);
    }
}

#[test]
fn machine_concatenation_and_unraveling_reports() {
    let dir = tempfile::tempdir().unwrap();
    let text = r#"{"model":"three_level","params":{"initial":[0.5,0.3,0.2]},"run":{"mode":"enumerate","dt":2,"steps":2},"outputs":["ft_report","histogram"]}"#;
    assert_eq!(qtherm(text, dir.path(), &[]).0, 0);
    let ft = json(dir.path(), "ft_report.json");
    for key in ["integral_total", "integral_adiabatic", "integral_nonadiabatic"] {
        assert!((ft[key]["value"].as_f64().unwrap() - 1.0).abs() <= 1e-10, "{key}");
    }

    let dir = tempfile::tempdir().unwrap();
    // mild temperatures keep exp(-Δ_i s) free of rare heavy weights
    let text = r#"{"model":"three_level","params":{"beta":[1.0,0.5,0.8],"initial":[0.5,0.3,0.2]},"run":{"mode":"unravel","dt":0.05,"t_final":10,"trajectories":5000,"seed":2},"outputs":["ft_report","histogram","rates"]}"#;
    assert_eq!(qtherm(text, dir.path(), &[]).0, 0);
    let ft = json(dir.path(), "ft_report.json");
    for key in ["integral_total", "integral_adiabatic", "integral_nonadiabatic"] {
        let (v, s) = (ft[key]["value"].as_f64().unwrap(), ft[key]["stderr"].as_f64().unwrap());
        assert!((v - 1.0).abs() <= 3.0 * s, "{key}: {v} ± {s}");
    }
    let h = rows(&read(dir.path(), "histogram.csv"), HISTOGRAM_HEADER);
    assert!((h.iter().map(|r| r[1]).sum::<f64>() - 1.0).abs() <= 1e-9);
    assert_eq!(json(dir.path(), "provenance.json")["diagnostics"]["trajectories"].as_f64(), Some(5000.0));
}

#[test]
fn cavity_rates_follow_closed_forms() {
    let text = r#"{"model":"cavity","params":{"epsilon":0.05,"gamma0":0.1,"beta":1,"n_max":40},
        "run":{"mode":"integrate","dt":0.01,"t_final":4,"rates_every":100},"outputs":["rates"]}"#;
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(qtherm(text, dir.path(), &[]).0, 0);
    let rates = rows(&read(dir.path(), "rates.csv"), RATES_HEADER);
    assert_eq!(rates.len(), 5);
    let p = CavityParams::new(1.0, C64::new(0.05, 0.0), 0.1, 1.0, 40).unwrap();
    let rho0 = gibbs_state(&p);
    for r in &rates {
        let cf = cavity_transients(&p, &rho0, r[0]).unwrap();
        assert!(r[1].abs() <= 1e-8);
        assert!((r[3] - cf.s_dot_a).abs() <= 1e-8);
        assert!((r[4] - cf.s_dot_na.unwrap()).abs() <= 1e-8);
        assert!((r[5] - cf.energy.w_dot).abs() <= 1e-8);
        assert!((r[6] - cf.energy.q_dot).abs() <= 1e-8);
        assert!((r[8] - cf.energy.x_dot).abs() <= 1e-8);
    }
}

#[test]
fn failures_map_to_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let (code, err) = qtherm(r#"{"model":"cavity","params":{"n_max":4},"run":{"mode":"integrate"},"outputs":["rates"]}"#, dir.path(), &[]);
    assert_eq!(code, 1);
    assert!(err.contains("n_max") && err.contains("run.dt") && err.contains("run.t_final"), "{err}");
    assert!(!dir.path().join("out").exists());

    // a step too long for the first-order step map
    let (code, err) = qtherm(
        r#"{"model":"three_level","run":{"mode":"enumerate","dt":1000,"steps":2},"outputs":["ft_report"]}"#,
        dir.path(),
        &[],
    );
    assert_eq!(code, 2, "{err}");
    assert!(err.contains("models"), "{err}");
    assert!(!dir.path().join("out").exists());

    let missing = Command::new(env!("CARGO_BIN_EXE_qtherm"))
        .args(["run", "--config", "/nonexistent/config.json", "--out"])
        .arg(dir.path().join("out"))
        .output()
        .unwrap();
    assert_eq!(missing.status.code(), Some(1));
}

#[test]
fn histograms_group_atoms_and_bin_samples() {
    let h = exact_histogram(&[(1.0, 0.25), (0.0, 0.25), (1.0 + 0.5 * MERGE_TOL, 0.25), (2.0, 0.25), (f64::INFINITY, 0.0)]);
    assert_eq!(h, vec![(0.0, 0.25), (1.0, 0.5), (2.0, 0.25)]);

    let values: Vec<f64> = (0..1000).map(|i| (i as f64 / 999.0) * 4.0).collect();
    let w = freedman_diaconis(&values).unwrap();
    assert!((w - 2.0 * 2.0 / 10.0).abs() <= 1e-2);
    let b = binned_histogram(&values, None);
    assert!((b.iter().map(|r| r.1).sum::<f64>() - 1.0).abs() <= 1e-12);
    assert!(b.windows(2).all(|p| (p[1].0 - p[0].0 - w).abs() <= 1e-9));
    let fixed = binned_histogram(&values, Some(1.0));
    assert_eq!(fixed.len(), 5);
    assert_eq!(fixed[0].0, 0.5);

    // identical samples fall back to atoms
    assert_eq!(binned_histogram(&[3.0, 3.0], None), vec![(3.0, 1.0)]);
    assert!(binned_histogram(&[], None).is_empty());
}
