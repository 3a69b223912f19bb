use clap::{Parser, Subcommand};
use qtherm_cli::{execute, Overrides};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "qtherm", version, about = "Entropy production and fluctuation theorems for open quantum systems")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment from a JSON config.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Replaces `run.seed`.
        #[arg(long)]
        seed: Option<u64>,
        /// Replaces `run.trajectories`.
        #[arg(long)]
        trajectories: Option<usize>,
    },
}

fn main() -> ExitCode {
    let Command::Run {
        config,
        out,
        seed,
        trajectories,
    } = Cli::parse().command;
    match execute(&config, &out, &Overrides { seed, trajectories }) {
        Ok(elapsed) => {
            eprintln!("wrote {} in {:.3} s", out.display(), elapsed.as_secs_f64());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
