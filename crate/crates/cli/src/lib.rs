//! JSON-configured experiments: parse and validate a config, run it against
//! the model crates and emit byte-stable CSV and JSON results.

#![forbid(unsafe_code)]

pub mod config;
pub mod emit;
mod error;
pub mod run;

pub use config::{parse_config, ConfigErrors, ExperimentConfig, Mode, ModelSpec, Output, Overrides};
pub use emit::{emit, render, sha256_hex};
pub use error::{CliError, Result};
pub use run::{run, ResultBundle};

use std::path::Path;
use std::time::Duration;

/// Reads, validates, runs and writes one experiment; files appear only once
/// the whole run has succeeded.
pub fn execute(config: &Path, out: &Path, overrides: &Overrides) -> Result<Duration> {
    let start = std::time::Instant::now();
    let bytes = std::fs::read(config).map_err(|e| CliError::io(config, e))?;
    let text = String::from_utf8(bytes.clone())
        .map_err(|_| ConfigErrors(vec!["config is not valid UTF-8".into()]))?;
    let cfg = parse_config(&text, overrides)?;
    let bundle = run(&cfg)?;
    let files = render(&bundle, &cfg, &sha256_hex(&bytes));
    emit(&files, out)?;
    Ok(start.elapsed())
}
