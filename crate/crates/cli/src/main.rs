use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::Parser;
use sptforge::config::{Experiment, ExperimentConfig, Mode};
use sptforge::{acceptance, experiments, init_workers, output_dir, verify};

/// Reproduce the Ising-cluster SPT figure data.
#[derive(Parser)]
#[command(name = "sptforge", version)]
struct Cli {
    #[arg(value_enum)]
    experiment: Experiment,
    /// JSON config, merged over the experiment's defaults.
    #[arg(long)]
    config: PathBuf,
    /// Deepest pipeline stage to run.
    #[arg(long, value_enum, default_value = "exact")]
    mode: Mode,
    /// Overrides the config seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory; defaults to the config's `output`, then `runs/<experiment>`.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn run(cli: Cli) -> Result<bool> {
    init_workers()?;
    let mut cfg = ExperimentConfig::load(&cli.config, cli.experiment)?;
    if cli.seed.is_some() {
        cfg.seed = cli.seed;
    }
    let out = output_dir(cli.experiment, &cfg, cli.out.as_deref());
    if cli.experiment == Experiment::Verify {
        let outcome = verify(&cfg, &out)?;
        print!("{}", acceptance::render_table(&outcome.results));
        println!("wrote {}", out.display());
        return Ok(outcome.passed());
    }
    let seed = cfg.seed.unwrap_or(0);
    let manifest = experiments::run(cli.experiment, &cfg, cli.mode, seed, &out)?;
    for f in &manifest.files {
        println!("{}", out.join(f).display());
    }
    Ok(true)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
