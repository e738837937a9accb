//! Experiment runner: validates a JSON configuration, dispatches the
//! requested experiment, writes the machine-readable report plus plot-ready
//! artifacts, and exits 0 only when every check passes (2 on configuration
//! errors, 3 on numerical aborts).

// Validation uses `!(x > 0.0)` instead of `x <= 0.0` so NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod config;
mod experiments;
mod report;

use clap::Parser;
use config::{ExperimentConfig, ExperimentKind};
use experiments::RunError;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "liouq",
    about = "Phase-space prequantization checks and classical wave-function experiments",
    version
)]
struct Cli {
    /// Experiment to run.
    #[arg(value_enum)]
    kind: ExperimentKind,

    /// JSON configuration file; built-in defaults are used when omitted.
    #[arg(long)]
    config: Option<PathBuf>,

    /// Output directory for report.json and artifacts.
    #[arg(long, default_value = "liouq-out")]
    out: PathBuf,

    /// Random seed override for seeded experiments.
    #[arg(long)]
    seed: Option<u64>,
}

fn load_config(cli: &Cli) -> Result<ExperimentConfig, String> {
    let mut config = match &cli.config {
        None => ExperimentConfig::default_for(cli.kind),
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| format!("cannot read {}: {e}", path.display()))?;
            serde_json::from_str(&text)
                .map_err(|e| format!("cannot parse {}: {e}", path.display()))?
        }
    };
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    Ok(config)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let config = match load_config(&cli) {
        Ok(config) => config,
        Err(message) => {
            eprintln!("configuration error: {message}");
            return ExitCode::from(2);
        }
    };

    match experiments::run(cli.kind, &config, &cli.out) {
        Ok(report) => {
            let path = cli.out.join("report.json");
            if let Err(e) = report.write(&path) {
                eprintln!("cannot write report: {e}");
                return ExitCode::from(3);
            }
            report.print_summary();
            println!("report: {}", path.display());
            if report.passed() {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(RunError::Validation(violations)) => {
            eprintln!("configuration invalid:");
            for violation in violations {
                eprintln!("  - {violation}");
            }
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(3)
        }
    }
}
