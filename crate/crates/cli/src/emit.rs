use crate::config::ExperimentConfig;
use crate::error::{CliError, Result};
use crate::run::{FtEntry, ResultBundle};
use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};
use std::io::Write;
use std::path::Path;

pub const HISTOGRAM_HEADER: &str = "value,probability";
pub const RATES_HEADER: &str = "t,S_dot,S_dot_i,S_dot_a,S_dot_na,W_dot,Q_dot,U_dot,X_dot";
pub const SWEEP_HEADER: &str = "beta1,beta1_virtual,beta2_virtual,beta3_virtual,Q_dot_1,Q_dot_2,Q_dot_3,p_g,p_A,p_B";

/// 17 significant digits in scientific notation.
pub fn number(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// Compact JSON whose floats carry 17 significant digits; non-finite
/// values become `null`.
struct Digits17;

impl serde_json::ser::Formatter for Digits17 {
    fn write_f64<W: ?Sized + Write>(&mut self, w: &mut W, v: f64) -> std::io::Result<()> {
        if v.is_finite() {
            w.write_all(number(v).as_bytes())
        } else {
            w.write_all(b"null")
        }
    }
}

pub fn to_json(v: &impl Serialize) -> String {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, Digits17);
    v.serialize(&mut ser).expect("in-memory JSON");
    buf.push(b'\n');
    String::from_utf8(buf).expect("JSON is UTF-8")
}

fn csv<const N: usize>(header: &str, rows: impl Iterator<Item = [f64; N]>) -> String {
    let mut s = String::from(header);
    s.push('\n');
    for r in rows {
        let cells: Vec<String> = r.iter().map(|&x| number(x)).collect();
        s.push_str(&cells.join(","));
        s.push('\n');
    }
    s
}

fn entry(e: &FtEntry) -> Value {
    json!({ "value": e.value, "stderr": e.stderr, "available": e.available })
}

/// File name and contents, in write order.
pub fn render(bundle: &ResultBundle, cfg: &ExperimentConfig, config_hash: &str) -> Vec<(String, String)> {
    let mut files = Vec::new();
    for (stem, h) in &bundle.histograms {
        files.push((format!("{stem}.csv"), csv(HISTOGRAM_HEADER, h.iter().map(|&(x, p)| [x, p]))));
    }
    if let Some(rows) = &bundle.rates {
        files.push(("rates.csv".into(), csv(RATES_HEADER, rows.iter().copied())));
    }
    if let Some(rows) = &bundle.sweep {
        files.push(("sweep.csv".into(), csv(SWEEP_HEADER, rows.iter().copied())));
    }
    if let Some(ft) = &bundle.ft {
        let v = json!({
            "config_sha256": config_hash,
            "integral_total": entry(&ft.total),
            "integral_adiabatic": entry(&ft.adiabatic),
            "integral_nonadiabatic": entry(&ft.nonadiabatic),
            "mean_total": ft.mean_total,
            "trajectories": ft.trajectories,
            "infinite": ft.infinite,
        });
        files.push(("ft_report.json".into(), to_json(&v)));
    }
    let listing: Vec<Value> = files
        .iter()
        .map(|(name, body)| json!({ "name": name, "sha256": sha256_hex(body.as_bytes()) }))
        .collect();
    let diagnostics: serde_json::Map<String, Value> =
        bundle.diagnostics.iter().map(|(k, v)| (k.clone(), json!(v))).collect();
    let provenance = json!({
        "config_sha256": config_hash,
        "model": cfg.model.name(),
        "mode": cfg.mode.name(),
        "seed": cfg.seed,
        "version": env!("CARGO_PKG_VERSION"),
        "overrides": {
            "seed": cfg.overrides.seed,
            "trajectories": cfg.overrides.trajectories,
        },
        "outputs": cfg.outputs.iter().map(|o| o.name()).collect::<Vec<_>>(),
        "files": listing,
        "diagnostics": diagnostics,
    });
    files.push(("provenance.json".into(), to_json(&provenance)));
    files
}

/// Writes rendered files into `out`, creating it if needed.
pub fn emit(files: &[(String, String)], out: &Path) -> Result<()> {
    std::fs::create_dir_all(out).map_err(|e| CliError::io(out, e))?;
    for (name, body) in files {
        let path = out.join(name);
        std::fs::write(&path, body).map_err(|e| CliError::io(&path, e))?;
    }
    Ok(())
}
