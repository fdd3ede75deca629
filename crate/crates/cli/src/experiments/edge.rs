use anyhow::Result;
use serde::Serialize;
use sptforge_core::observables::magnetization_profile;
use sptforge_core::pauli::Pauli;
use sptforge_core::zne::ZneResult;
use sptforge_core::PauliString;

use crate::config::{ExperimentConfig, Mode};
use crate::pipeline::{ground_space, hamiltonian, prepare_ground, CompileRecord};

#[derive(Debug, Clone, Serialize)]
pub struct EdgeRow {
    pub site: usize,
    pub exact: f64,
    pub noiseless: Option<f64>,
    pub raw: Option<f64>,
    pub raw_err: Option<f64>,
    pub mitigated: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct EdgeRun {
    pub rows: Vec<EdgeRow>,
    pub compile: Option<CompileRecord>,
    pub fits: Vec<ZneResult>,
}

impl EdgeRun {
    pub fn column(&self, pick: impl Fn(&EdgeRow) -> Option<f64>) -> Option<Vec<f64>> {
        self.rows.iter().map(pick).collect()
    }
}

pub fn z_observables(l: usize) -> Result<Vec<PauliString>> {
    (0..l).map(|q| Ok(PauliString::single(l, q, Pauli::Z)?)).collect()
}

/// `min(|Z₀|, |Z_{L−1}|) − max_bulk |Zᵢ|`; positive when the edges dominate.
pub fn edge_margin(profile: &[f64]) -> f64 {
    let l = profile.len();
    let edge = profile[0].abs().min(profile[l - 1].abs());
    let bulk = profile[1..l - 1].iter().fold(0.0f64, |m, z| m.max(z.abs()));
    edge - bulk
}

/// `⟨Zᵢ⟩` per site. The exact column uses the state of the low-energy
/// manifold (within the degeneracy window) that maximizes `⟨Z₀⟩`.
pub fn edge_profile(cfg: &ExperimentConfig, mode: Mode, seed: u64) -> Result<EdgeRun> {
    let m = &cfg.model;
    let ham = hamiltonian(m.j, m.h, m.g, m.l)?;
    let obs = z_observables(m.l)?;
    let representative = ground_space(&ham, &cfg.preparation)?.maximizing(&obs[0])?;
    let exact = magnetization_profile(&representative);
    let mut rows: Vec<EdgeRow> = exact
        .iter()
        .enumerate()
        .map(|(site, &z)| EdgeRow { site, exact: z, noiseless: None, raw: None, raw_err: None, mitigated: None })
        .collect();
    if mode == Mode::Exact {
        return Ok(EdgeRun { rows, compile: None, fits: Vec::new() });
    }
    let prep = prepare_ground(&ham, cfg, seed, format!("edge g={}", m.g))?;
    for (r, z) in rows.iter_mut().zip(magnetization_profile(&prep.output)) {
        r.noiseless = Some(z);
    }
    let mut fits = Vec::new();
    if mode == Mode::Noisy {
        fits = prep.mitigate(&obs, cfg, seed)?;
        for (r, f) in rows.iter_mut().zip(&fits) {
            r.raw = Some(f.raw);
            r.raw_err = Some(f.raw_err);
            r.mitigated = Some(f.mitigated);
        }
    }
    Ok(EdgeRun { rows, compile: Some(prep.record), fits })
}
