use std::fmt;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};
use sptforge_core::ansatz::{CompileOptions, TrainOptions};
use sptforge_core::noise::NoiseModel;
use sptforge_core::zne::{ExtrapolationForm, ZneSettings};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    PhaseDiagram,
    StringSweep,
    EdgeProfile,
    Quench,
    Renyi,
    Tomography,
    Verify,
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Experiment::PhaseDiagram => "phase-diagram",
            Experiment::StringSweep => "string-sweep",
            Experiment::EdgeProfile => "edge-profile",
            Experiment::Quench => "quench",
            Experiment::Renyi => "renyi",
            Experiment::Tomography => "tomography",
            Experiment::Verify => "verify",
        }
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// How far down the preparation pipeline an experiment goes. Each mode also
/// computes every column of the cheaper modes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Exact,
    Noiseless,
    Noisy,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub j: f64,
    pub h: f64,
    pub g: f64,
    pub l: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PreparationConfig {
    /// `"plus"`, `"zero"`, or an explicit bitstring (qubit 0 first).
    pub initial: String,
    /// Fixed imaginary time. When absent, `beta_schedule` chooses it.
    pub beta: Option<f64>,
    pub target_fidelity: f64,
    /// Used when the schedule cannot run, e.g. on a degenerate ground space.
    pub fallback_beta: f64,
    /// Energy window defining the exact ground space.
    pub degeneracy_window: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnsatzConfig {
    pub start_layers: usize,
    pub max_layers: usize,
    pub restarts: usize,
    pub max_iters: usize,
    pub tol: f64,
}

impl AnsatzConfig {
    pub fn compile_options(&self, seed: u64) -> CompileOptions {
        CompileOptions {
            start_layers: self.start_layers,
            max_layers: self.max_layers,
            train: TrainOptions {
                max_iters: self.max_iters,
                restarts: self.restarts,
                tol: self.tol,
                seed,
                ..TrainOptions::default()
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseConfig {
    pub p_ecr: f64,
    pub p_readout: f64,
}

impl NoiseConfig {
    pub fn model(&self, seed: u64) -> Result<NoiseModel> {
        Ok(NoiseModel::new(self.p_ecr, self.p_readout, seed)?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ZneConfig {
    pub m_list: Vec<usize>,
    pub form: ExtrapolationForm,
    pub trajectories: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuenchConfig {
    pub bitstring: String,
    pub t_max: f64,
    pub t_points: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RenyiConfig {
    pub min_kept: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TomographyConfig {
    pub subsystem: Vec<usize>,
    /// Shots per basis setting; every entry gets its own spectrum row.
    pub shot_ladder: Vec<u64>,
    pub min_shots: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub model: ModelConfig,
    pub g_list: Vec<f64>,
    /// Points per edge of the normalized `(J, h, g)` simplex.
    pub grid_points: usize,
    pub preparation: PreparationConfig,
    pub ansatz: AnsatzConfig,
    pub noise: NoiseConfig,
    pub zne: ZneConfig,
    pub shots: u64,
    pub seed: Option<u64>,
    pub output: Option<PathBuf>,
    pub quench: QuenchConfig,
    pub renyi: RenyiConfig,
    pub tomography: TomographyConfig,
}

impl ExperimentConfig {
    /// Settings every experiment starts from before the user's file is merged in.
    pub fn base() -> Self {
        Self {
            model: ModelConfig { j: 1.0, h: 1.0, g: 2.5, l: 8 },
            g_list: (0..=12).map(|k| 0.25 * k as f64).collect(),
            grid_points: 15,
            preparation: PreparationConfig {
                initial: "plus".into(),
                beta: None,
                target_fidelity: 0.999,
                fallback_beta: 4.0,
                degeneracy_window: 1e-8,
            },
            ansatz: AnsatzConfig { start_layers: 2, max_layers: 12, restarts: 8, max_iters: 500, tol: 1e-4 },
            noise: NoiseConfig { p_ecr: 0.005, p_readout: 0.006 },
            zne: ZneConfig { m_list: vec![0, 2, 4, 6], form: ExtrapolationForm::Exponential, trajectories: 1000 },
            shots: 20000,
            seed: None,
            output: None,
            quench: QuenchConfig { bitstring: "01111110".into(), t_max: 5.0, t_points: 51 },
            renyi: RenyiConfig { min_kept: 100 },
            tomography: TomographyConfig { subsystem: vec![0, 1, 2], shot_ladder: vec![5000, 20000, 200000], min_shots: 100 },
        }
    }

    pub fn default_for(experiment: Experiment) -> Self {
        let mut c = Self::base();
        match experiment {
            Experiment::EdgeProfile => {
                // The symmetric ground state has zero magnetization; a short
                // evolution from |0…0> stays in the symmetry-broken edge sector.
                c.preparation.initial = "zero".into();
                c.preparation.beta = Some(4.0);
                c.preparation.degeneracy_window = 0.05;
            }
            Experiment::Quench => {
                c.ansatz.tol = 1e-3;
            }
            Experiment::Renyi | Experiment::Tomography => {
                c.model.l = 4;
                c.ansatz.tol = 1e-4;
            }
            Experiment::PhaseDiagram => {
                c.ansatz.tol = 1e-3;
            }
            Experiment::StringSweep | Experiment::Verify => {}
        }
        c
    }

    /// Parses `text` as a partial JSON document over the experiment defaults.
    pub fn from_json_over_defaults(text: &str, experiment: Experiment) -> Result<Self> {
        let user: Value = serde_json::from_str(text).context("config is not valid JSON")?;
        if !user.is_object() {
            bail!("config must be a JSON object");
        }
        let mut merged = serde_json::to_value(Self::default_for(experiment))?;
        merge(&mut merged, user);
        let cfg: Self = serde_json::from_value(merged).context("config does not match the expected schema")?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path, experiment: Experiment) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Self::from_json_over_defaults(&text, experiment)
    }

    pub fn validate(&self) -> Result<()> {
        if self.model.l < 3 {
            bail!("chain length {} is too short (need L >= 3)", self.model.l);
        }
        if self.grid_points < 3 {
            bail!("simplex grid needs at least 3 points per edge, got {}", self.grid_points);
        }
        if self.shots == 0 {
            bail!("shots must be positive");
        }
        if self.ansatz.start_layers == 0 || self.ansatz.max_layers < self.ansatz.start_layers {
            bail!("ansatz layers must satisfy 1 <= start_layers <= max_layers");
        }
        if self.quench.t_points < 2 || self.quench.t_max <= 0.0 {
            bail!("quench grid needs t_max > 0 and at least 2 points");
        }
        if self.tomography.subsystem.len() != 3 {
            bail!("tomography subsystem must name exactly 3 qubits");
        }
        if self.zne.m_list.iter().any(|m| m % 2 != 0) {
            bail!("identity-block counts in zne.m_list must be even");
        }
        NoiseModel::new(self.noise.p_ecr, self.noise.p_readout, 0)?;
        Ok(())
    }

    pub fn zne_settings(&self) -> ZneSettings {
        ZneSettings {
            m_list: self.zne.m_list.clone(),
            form: self.zne.form,
            shots: self.shots,
            trajectories: self.zne.trajectories,
        }
    }

    /// Canonical JSON of the resolved config.
    pub fn canonical_json(&self) -> String {
        serde_json::to_string(self).expect("config serializes")
    }

    pub fn sha256(&self) -> String {
        hex::encode(Sha256::digest(self.canonical_json().as_bytes()))
    }

    pub fn ts(&self) -> Vec<f64> {
        let n = self.quench.t_points;
        (0..n).map(|k| self.quench.t_max * k as f64 / (n - 1) as f64).collect()
    }
}

/// Recursive object merge; non-object values in `patch` replace `base`.
fn merge(base: &mut Value, patch: Value) {
    match (base, patch) {
        (Value::Object(b), Value::Object(p)) => {
            for (k, v) in p {
                match b.get_mut(&k) {
                    Some(slot) => merge(slot, v),
                    None => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (slot, v) => *slot = v,
    }
}
