//! `funcspace-lab <experiment> --config <file> [--J n] [--seed n] [--out dir]`
//!
//! Exit status: 0 when every threshold passes, 1 when one fails (or the run
//! aborts), 2 on an invalid configuration.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use funcspace_core::experiments::{
    self, apply_overrides, ConfigError, Experiment, ExperimentConfig, RunError,
};
use funcspace_core::LabError;

const THREADS_VAR: &str = "FUNCSPACE_LAB_THREADS";

#[derive(Debug, Parser)]
#[command(
    name = "funcspace-lab",
    version,
    about = "Runs a named verification experiment"
)]
struct Args {
    /// One of verify-lemma3, verify-prop-dy, verify-cww, verify-interpol,
    /// verify-expimb, verify-lemma-star, appr-decay, envelope, entropy-curve,
    /// packing, all.
    experiment: String,
    /// JSON configuration file.
    #[arg(long)]
    config: PathBuf,
    /// Resolution exponent; the grid has 2^J points.
    #[arg(long = "J")]
    j: Option<u32>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory; overrides `output_dir` from the config.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn invalid(e: ConfigError) -> ExitCode {
    eprintln!("error: {e}");
    ExitCode::from(2)
}

fn load(args: &Args) -> Result<ExperimentConfig, ConfigError> {
    let experiment: Experiment = args.experiment.parse()?;
    let text = std::fs::read_to_string(&args.config).map_err(|e| {
        ConfigError::new(
            "config",
            format!("cannot read {}: {e}", args.config.display()),
        )
    })?;
    let mut cfg = ExperimentConfig::from_json(&text, experiment)?;
    apply_overrides(&mut cfg, args.j, args.seed, args.out.clone());
    Ok(cfg)
}

fn configure_threads() -> Result<(), ConfigError> {
    let Ok(raw) = std::env::var(THREADS_VAR) else {
        return Ok(());
    };
    let threads: usize = raw.trim().parse().ok().filter(|&t| t >= 1).ok_or_else(|| {
        ConfigError::new(THREADS_VAR, format!("{raw:?} is not a positive integer"))
    })?;
    funcspace_core::par::init_threads(threads);
    Ok(())
}

fn main() -> ExitCode {
    let args = Args::parse();
    if let Err(e) = configure_threads() {
        return invalid(e);
    }
    let cfg = match load(&args) {
        Ok(cfg) => cfg,
        Err(e) => return invalid(e),
    };
    let outcome = match experiments::run(&cfg) {
        Ok(o) => o,
        Err(RunError::Config(e)) => return invalid(e),
        Err(RunError::Lab(LabError::Parameter { name, reason })) => {
            return invalid(ConfigError::new(format!("params.{name}"), reason))
        }
        Err(RunError::Lab(e)) => {
            eprintln!("error: {} aborted: {e}", cfg.experiment);
            return ExitCode::from(1);
        }
    };
    if let Err(e) = outcome.write(&cfg.output_dir) {
        return invalid(ConfigError::new(
            "output_dir",
            format!("cannot write {}: {e}", cfg.output_dir.display()),
        ));
    }
    for check in &outcome.checks {
        println!("{}", check.line());
    }
    let failed: Vec<&str> = outcome.failures().map(|c| c.criterion.as_str()).collect();
    if failed.is_empty() {
        println!("{}: all thresholds passed", cfg.experiment);
        ExitCode::SUCCESS
    } else {
        for name in &failed {
            eprintln!("threshold failed: {name}");
        }
        ExitCode::from(1)
    }
}
