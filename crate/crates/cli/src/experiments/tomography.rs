use anyhow::Result;
use serde::Serialize;
use sptforge_core::noise::sample_trajectories;
use sptforge_core::observables::{entanglement_spectrum, tomography_3q, EntanglementSpectrum, TomographyMode, TomographyResult, SPECTRUM_FLOOR};
use sptforge_core::{MeasurementRecord, Statevector};

use crate::config::{ExperimentConfig, Mode};
use crate::pipeline::{derive_seed, ground_space, hamiltonian, prepare_ground, CompileRecord};

/// One reconstructed `ρ_A`: where it came from and what it looks like.
#[derive(Debug, Clone, Serialize)]
pub struct Reconstruction {
    /// `exact`, `noiseless` or `noisy`.
    pub source: String,
    /// Shots per basis setting; `None` for analytic expectations.
    pub shots_per_basis: Option<u64>,
    pub seed: Option<u64>,
    pub coefficients: Vec<f64>,
    /// Row-major `[re, im]` pairs of the 8×8 matrix.
    pub rho: Vec<[f64; 2]>,
    pub spectrum: EntanglementSpectrum,
    #[serde(skip)]
    pub records: Vec<MeasurementRecord>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SpectrumRow {
    pub source: String,
    pub shots_per_basis: Option<u64>,
    pub index: usize,
    pub epsilon: f64,
    pub lambda: f64,
    pub delta_eps: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct TomographyRun {
    pub reconstructions: Vec<Reconstruction>,
    pub compile: Option<CompileRecord>,
}

impl TomographyRun {
    pub fn exact(&self) -> &Reconstruction {
        &self.reconstructions[0]
    }

    pub fn find(&self, source: &str, shots: Option<u64>) -> Option<&Reconstruction> {
        self.reconstructions.iter().find(|r| r.source == source && r.shots_per_basis == shots)
    }

    pub fn spectrum_rows(&self) -> Vec<SpectrumRow> {
        let mut rows = Vec::new();
        for r in &self.reconstructions {
            let s = &r.spectrum;
            for (i, (&epsilon, &lambda)) in s.epsilons.iter().zip(&s.lambdas).enumerate() {
                rows.push(SpectrumRow {
                    source: r.source.clone(),
                    shots_per_basis: r.shots_per_basis,
                    index: i + 1,
                    epsilon,
                    lambda,
                    delta_eps: s.delta_eps.as_ref().map(|d| d[i]),
                });
            }
        }
        rows
    }
}

fn reconstruct(
    source: &str,
    states: &[Statevector],
    subsystem: &[usize],
    mode: TomographyMode,
    reference: Option<&[f64]>,
) -> Result<Reconstruction> {
    let TomographyResult { coefficients, rho, records, .. } = tomography_3q(states, subsystem, mode)?;
    let spectrum = entanglement_spectrum(&rho, SPECTRUM_FLOOR, reference)?;
    let (shots_per_basis, seed) = match mode {
        TomographyMode::Analytic => (None, None),
        TomographyMode::Shots { shots_per_basis, seed, .. } => (Some(shots_per_basis), Some(seed)),
    };
    let m = rho.matrix();
    let flat = (0..m.nrows()).flat_map(|i| (0..m.ncols()).map(move |j| [m[(i, j)].re, m[(i, j)].im])).collect();
    Ok(Reconstruction { source: source.into(), shots_per_basis, seed, coefficients, rho: flat, spectrum, records })
}

/// `ρ_A` on three sites and its entanglement spectrum. The exact column is
/// analytic; circuit columns add one shot-sampled reconstruction per entry of
/// the shot ladder, with δε taken against the exact spectrum.
pub fn tomography(cfg: &ExperimentConfig, mode: Mode, seed: u64) -> Result<TomographyRun> {
    let m = &cfg.model;
    let sub = &cfg.tomography.subsystem;
    let ham = hamiltonian(m.j, m.h, m.g, m.l)?;
    let space = ground_space(&ham, &cfg.preparation)?;
    let exact = reconstruct("exact", &space.states, sub, TomographyMode::Analytic, None)?;
    let reference = exact.spectrum.epsilons.clone();
    let mut reconstructions = vec![exact];
    if mode == Mode::Exact {
        return Ok(TomographyRun { reconstructions, compile: None });
    }

    let prep = prepare_ground(&ham, cfg, seed, format!("tomography g={}", m.g))?;
    let noiseless = std::slice::from_ref(&prep.output);
    reconstructions.push(reconstruct("noiseless", noiseless, sub, TomographyMode::Analytic, Some(&reference))?);
    let ladder = &cfg.tomography.shot_ladder;
    for (k, &shots) in ladder.iter().enumerate() {
        let mode = TomographyMode::Shots {
            shots_per_basis: shots,
            seed: derive_seed(seed, 100 + k as u64),
            readout: None,
            min_shots: cfg.tomography.min_shots,
        };
        reconstructions.push(reconstruct("noiseless", noiseless, sub, mode, Some(&reference))?);
    }
    if mode == Mode::Noisy {
        let model = cfg.noise.model(derive_seed(seed, 200))?;
        let states = sample_trajectories(&prep.compiled.circuit.gates(), &prep.input, &model, cfg.zne.trajectories)?;
        for (k, &shots) in ladder.iter().enumerate() {
            let mode = TomographyMode::Shots {
                shots_per_basis: shots,
                seed: derive_seed(seed, 300 + k as u64),
                readout: Some(model),
                min_shots: cfg.tomography.min_shots,
            };
            reconstructions.push(reconstruct("noisy", &states, sub, mode, Some(&reference))?);
        }
    }
    Ok(TomographyRun { reconstructions, compile: Some(prep.record) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::Experiment;

    #[test]
    fn exact_spectrum_has_two_dominant_levels() {
        let cfg = ExperimentConfig::default_for(Experiment::Tomography);
        let run = tomography(&cfg, Mode::Exact, 0).unwrap();
        let eps = &run.exact().spectrum.epsilons;
        assert!((eps[0] - 0.75462).abs() < 1e-4);
        assert!((eps[1] - 0.24538).abs() < 1e-4);
        assert!(eps[2].abs() < 1e-9);
        assert_eq!(run.exact().rho.len(), 64);
        assert_eq!(run.spectrum_rows().len(), 8);
    }

    #[test]
    fn noiseless_ladder_has_delta_report() {
        let mut cfg = ExperimentConfig::default_for(Experiment::Tomography);
        cfg.tomography.shot_ladder = vec![2000];
        let run = tomography(&cfg, Mode::Noiseless, 2).unwrap();
        assert_eq!(run.reconstructions.len(), 3);
        let sampled = run.find("noiseless", Some(2000)).unwrap();
        assert_eq!(sampled.records.len(), 27);
        let d = sampled.spectrum.delta_eps.as_ref().unwrap();
        assert!(d[0].abs() < 0.05);
        let rows = run.spectrum_rows();
        assert!(rows.iter().filter(|r| r.source == "exact").all(|r| r.delta_eps.is_none()));
    }
}
