use anyhow::Result;
use serde::Serialize;
use sptforge_core::model::GroundSpace;
use sptforge_core::noise::sample_trajectories;
use sptforge_core::observables::{qae_renyi, renyi2_swap, QaeCircuit, QaeMode, RenyiValue, TwoCopyState};
use sptforge_core::zne::{extrapolate, fold, ExtrapolationFit};

use crate::config::{ExperimentConfig, Mode};
use crate::pipeline::{derive_seed, ground_space, hamiltonian, prepare_ground, CompileRecord, Prepared};

/// `S²ₓ` for subsystems `0..x`, `x = 0..=L`.
#[derive(Debug, Clone, Serialize)]
pub struct RenyiRow {
    pub x: usize,
    pub exact_s2: f64,
    /// Analytic QAE on two copies of the trained circuit.
    pub noiseless_s2: Option<f64>,
    /// Swap expectation on the same two-copy state.
    pub swap_s2: Option<f64>,
    /// Analytic QAE on the two-copy dilated QITE register.
    pub dilation_s2: Option<f64>,
    pub raw_r2: Option<f64>,
    pub raw_err: Option<f64>,
    pub raw_s2: Option<f64>,
    pub mitigated_r2: Option<f64>,
    pub mitigated_s2: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct RenyiFit {
    pub x: usize,
    pub fit: Option<ExtrapolationFit>,
    pub error: Option<String>,
}

#[derive(Debug, Clone)]
pub struct RenyiRun {
    pub rows: Vec<RenyiRow>,
    pub compile: Option<CompileRecord>,
    pub fits: Vec<RenyiFit>,
}

/// `Tr ρ_A²` of the equal-weight mixture over the ground-space basis.
fn ground_purity(space: &GroundSpace, x: usize) -> Result<f64> {
    if x == 0 {
        return Ok(1.0);
    }
    let keep: Vec<usize> = (0..x).collect();
    let d = space.degeneracy() as f64;
    let mut acc = space.states[0].reduced_density(&keep)?.into_matrix();
    for s in &space.states[1..] {
        acc += s.reduced_density(&keep)?.into_matrix();
    }
    Ok((&acc * &acc).trace().re / (d * d))
}

/// Folded noisy two-copy runs read out through QAE with shots and readout
/// error, extrapolated per `x`.
fn noisy_columns(prep: &Prepared, cfg: &ExperimentConfig, seed: u64) -> Result<(Vec<(f64, f64)>, Vec<RenyiFit>)> {
    let l = prep.input.n_qubits();
    let mut ms = cfg.zne.m_list.clone();
    ms.push(0);
    ms.sort_unstable();
    ms.dedup();
    let base = &prep.compiled.circuit;
    // estimates[i][x] = (value, std_err) at depth ms[i].
    let mut estimates = Vec::with_capacity(ms.len());
    for (i, &m) in ms.iter().enumerate() {
        let gates = fold(base, m)?.circuit().gates();
        let tag = 16 * i as u64;
        let model_a = cfg.noise.model(derive_seed(seed, tag))?;
        let model_b = cfg.noise.model(derive_seed(seed, tag + 1))?;
        let a = sample_trajectories(&gates, &prep.input, &model_a, cfg.zne.trajectories)?;
        let b = sample_trajectories(&gates, &prep.input, &model_b, cfg.zne.trajectories)?;
        let pairs = a.iter().zip(&b).map(|(x, y)| TwoCopyState::from_register(x.tensor(y))).collect::<Result<Vec<_>, _>>()?;
        let qae = QaeCircuit::from_ensemble(&pairs)?;
        let per_x = (0..=l)
            .map(|x| {
                let mode = QaeMode::Shots {
                    shots: cfg.shots,
                    seed: derive_seed(seed, tag + 2 + x as u64),
                    readout: Some(model_a),
                    min_kept: cfg.renyi.min_kept,
                };
                let e = qae_renyi(&qae, x, mode)?;
                Ok((e.value, e.std_err))
            })
            .collect::<Result<Vec<_>>>()?;
        estimates.push(per_x);
    }
    let xs: Vec<f64> = ms.iter().map(|m| (base.n_layers() + m) as f64).collect();
    let raw = estimates[0].clone();
    let fits = (0..=l)
        .map(|x| {
            let ys: Vec<f64> = estimates.iter().map(|e| e[x].0).collect();
            let es: Vec<f64> = estimates.iter().map(|e| e[x].1).collect();
            match extrapolate(&xs, &ys, &es, cfg.zne.form) {
                Ok(fit) => RenyiFit { x, fit: Some(fit), error: None },
                Err(e) => RenyiFit { x, fit: None, error: Some(e.to_string()) },
            }
        })
        .collect();
    Ok((raw, fits))
}

pub fn renyi(cfg: &ExperimentConfig, mode: Mode, seed: u64) -> Result<RenyiRun> {
    let m = &cfg.model;
    let ham = hamiltonian(m.j, m.h, m.g, m.l)?;
    let space = ground_space(&ham, &cfg.preparation)?;
    let mut rows: Vec<RenyiRow> = (0..=m.l)
        .map(|x| {
            Ok(RenyiRow {
                x,
                exact_s2: RenyiValue::from_r2(ground_purity(&space, x)?).s2,
                noiseless_s2: None,
                swap_s2: None,
                dilation_s2: None,
                raw_r2: None,
                raw_err: None,
                raw_s2: None,
                mitigated_r2: None,
                mitigated_s2: None,
            })
        })
        .collect::<Result<_>>()?;
    if mode == Mode::Exact {
        return Ok(RenyiRun { rows, compile: None, fits: Vec::new() });
    }

    let prep = prepare_ground(&ham, cfg, seed, format!("renyi g={}", m.g))?;
    let two_copy = TwoCopyState::from_state(&prep.output);
    let qae = QaeCircuit::from_two_copy(&two_copy);
    let beta = prep.record.beta.unwrap_or(cfg.preparation.fallback_beta);
    let dilated = QaeCircuit::from_dilation(&ham, beta, &prep.input)?;
    for r in rows.iter_mut() {
        r.noiseless_s2 = Some(qae_renyi(&qae, r.x, QaeMode::Analytic)?.renyi().s2);
        r.swap_s2 = Some(renyi2_swap(&two_copy, r.x)?.s2);
        r.dilation_s2 = Some(qae_renyi(&dilated, r.x, QaeMode::Analytic)?.renyi().s2);
    }
    let mut fits = Vec::new();
    if mode == Mode::Noisy {
        let (raw, f) = noisy_columns(&prep, cfg, seed)?;
        for (r, ((v, e), fit)) in rows.iter_mut().zip(raw.into_iter().zip(&f)) {
            r.raw_r2 = Some(v);
            r.raw_err = Some(e);
            r.raw_s2 = Some(RenyiValue::from_r2(v).s2);
            if let Some(fit) = &fit.fit {
                r.mitigated_r2 = Some(fit.zero_noise_value);
                r.mitigated_s2 = Some(RenyiValue::from_r2(fit.zero_noise_value).s2);
            }
        }
        fits = f;
    }
    Ok(RenyiRun { rows, compile: Some(prep.record), fits })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::Experiment;

    #[test]
    fn exact_half_chain_entropy() {
        let cfg = ExperimentConfig::default_for(Experiment::Renyi);
        let run = renyi(&cfg, Mode::Exact, 0).unwrap();
        assert_eq!(run.rows.len(), 5);
        assert!((run.rows[2].exact_s2 - 0.7137).abs() < 1e-3);
        assert!(run.rows[0].exact_s2.abs() < 1e-12);
        assert!(run.rows[4].exact_s2.abs() < 1e-9);
    }

    #[test]
    fn noiseless_columns_agree() {
        let cfg = ExperimentConfig::default_for(Experiment::Renyi);
        let run = renyi(&cfg, Mode::Noiseless, 4).unwrap();
        for r in &run.rows {
            let (q, s) = (r.noiseless_s2.unwrap(), r.swap_s2.unwrap());
            assert!((q - s).abs() < 1e-9);
            assert!((q - r.exact_s2).abs() < 0.05);
            assert!((r.dilation_s2.unwrap() - r.exact_s2).abs() < 0.05);
        }
    }
}
