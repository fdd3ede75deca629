use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

use crate::config::{Experiment, ExperimentConfig, Mode};

pub const MANIFEST_FILE: &str = "manifest.json";

/// Record of one run: what was computed, from which config, and where it went.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub experiment: String,
    pub mode: Mode,
    pub seed: u64,
    pub config_sha256: String,
    pub version: String,
    pub files: Vec<String>,
    /// Wall-clock seconds per stage.
    pub timings: BTreeMap<String, f64>,
}

/// Single writer for a run directory. Files are listed in write order.
pub struct RunWriter {
    dir: PathBuf,
    files: Vec<String>,
    timings: BTreeMap<String, f64>,
}

impl RunWriter {
    pub fn create(dir: &Path) -> Result<Self> {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        Ok(Self { dir: dir.to_path_buf(), files: Vec::new(), timings: BTreeMap::new() })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn csv<T: Serialize>(&mut self, name: &str, rows: &[T]) -> Result<()> {
        let path = self.dir.join(name);
        let mut w = csv::Writer::from_path(&path).with_context(|| format!("writing {}", path.display()))?;
        for r in rows {
            w.serialize(r)?;
        }
        w.flush()?;
        self.files.push(name.to_string());
        Ok(())
    }

    pub fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let path = self.dir.join(name);
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
        self.files.push(name.to_string());
        Ok(())
    }

    pub fn time<T>(&mut self, stage: &str, f: impl FnOnce() -> Result<T>) -> Result<T> {
        let start = Instant::now();
        let out = f()?;
        self.timings.insert(stage.to_string(), start.elapsed().as_secs_f64());
        Ok(out)
    }

    pub fn finish(mut self, experiment: Experiment, mode: Mode, seed: u64, cfg: &ExperimentConfig) -> Result<RunManifest> {
        self.json("config.json", cfg)?;
        let manifest = RunManifest {
            experiment: experiment.name().to_string(),
            mode,
            seed,
            config_sha256: cfg.sha256(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            files: self.files,
            timings: self.timings,
        };
        let mut text = serde_json::to_string_pretty(&manifest)?;
        text.push('\n');
        fs::write(self.dir.join(MANIFEST_FILE), text)?;
        Ok(manifest)
    }
}

/// Loads a run directory's manifest and checks that every listed file exists
/// and parses as CSV or JSON.
pub fn check_run_dir(dir: &Path) -> Result<RunManifest> {
    let text = fs::read_to_string(dir.join(MANIFEST_FILE)).context("reading manifest")?;
    let manifest: RunManifest = serde_json::from_str(&text).context("parsing manifest")?;
    for name in &manifest.files {
        let path = dir.join(name);
        if !path.is_file() {
            bail!("listed output {name} is missing");
        }
        if name.ends_with(".json") {
            let body = fs::read_to_string(&path)?;
            serde_json::from_str::<serde_json::Value>(&body).with_context(|| format!("{name} is not valid JSON"))?;
        } else if name.ends_with(".csv") {
            let mut r = csv::Reader::from_path(&path)?;
            for rec in r.records() {
                rec.with_context(|| format!("{name} is not valid CSV"))?;
            }
        }
    }
    Ok(manifest)
}
