//! Experiment driver for the Ising-cluster pipeline: per-figure experiments in
//! exact, noiseless and noisy modes, run manifests, and the acceptance suite.

pub mod acceptance;
pub mod config;
pub mod experiments;
pub mod output;
pub mod pipeline;

use std::path::{Path, PathBuf};

use anyhow::{bail, Result};

use config::{Experiment, ExperimentConfig, Mode};
use output::{RunManifest, RunWriter};

/// Environment variable that caps the worker pool size.
pub const WORKERS_ENV: &str = "SPTFORGE_WORKERS";

/// Sizes the global worker pool from [`WORKERS_ENV`] when it is set.
pub fn init_workers() -> Result<()> {
    if let Ok(v) = std::env::var(WORKERS_ENV) {
        let n: usize = v.parse().map_err(|_| anyhow::anyhow!("{WORKERS_ENV}={v:?} is not a positive integer"))?;
        if n == 0 {
            bail!("{WORKERS_ENV} must be positive");
        }
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    Ok(())
}

pub fn output_dir(experiment: Experiment, cfg: &ExperimentConfig, out: Option<&Path>) -> PathBuf {
    out.map(Path::to_path_buf)
        .or_else(|| cfg.output.clone())
        .unwrap_or_else(|| PathBuf::from("runs").join(experiment.name()))
}

/// Outcome of `verify`: the manifest and whether every criterion passed.
pub struct VerifyOutcome {
    pub manifest: RunManifest,
    pub results: Vec<acceptance::CriterionResult>,
}

impl VerifyOutcome {
    pub fn passed(&self) -> bool {
        self.results.iter().all(|r| r.passed)
    }
}

/// Runs the acceptance suite and records it like any other experiment.
/// Configs without a seed are refused.
pub fn verify(cfg: &ExperimentConfig, out: &Path) -> Result<VerifyOutcome> {
    let Some(seed) = cfg.seed else {
        bail!("verify needs an explicit seed in the config (or --seed)");
    };
    let mut w = RunWriter::create(out)?;
    let results = w.time("acceptance", || Ok(acceptance::run_all(seed)))?;
    w.csv("acceptance.csv", &results)?;
    let manifest = w.finish(Experiment::Verify, Mode::Noisy, seed, cfg)?;
    Ok(VerifyOutcome { manifest, results })
}
