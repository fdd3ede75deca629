//! State preparation shared by all experiments: exact ground space, QITE
//! target, compiled circuit, and the noisy ZNE readout on top of it.

use anyhow::{bail, Context, Result};
use serde::Serialize;
use sptforge_core::ansatz::{compile, overlap_fidelity, CompiledCircuit, Objective};
use sptforge_core::dilation::{beta_schedule, qite_prepare};
use sptforge_core::model::{build_hamiltonian, exact_ground_state, GroundSpace, HamiltonianOperator, IsingClusterParams};
use sptforge_core::zne::{zne_expectations, ZneResult};
use sptforge_core::{GateOp, PauliString, Statevector};

use crate::config::{ExperimentConfig, PreparationConfig};

pub fn hamiltonian(j: f64, h: f64, g: f64, l: usize) -> Result<HamiltonianOperator> {
    Ok(build_hamiltonian(&IsingClusterParams::new(j, h, g, l)?)?)
}

pub fn initial_state(spec: &str, l: usize) -> Result<Statevector> {
    match spec {
        "plus" => Ok(Statevector::plus(l)),
        "zero" => Ok(Statevector::zero(l)),
        bits => {
            if bits.len() != l {
                bail!("initial bitstring {bits:?} has {} sites, chain has {l}", bits.len());
            }
            Statevector::from_bitstring(bits).with_context(|| format!("initial state {bits:?}"))
        }
    }
}

/// Independent stream for sub-task `tag` of a run seeded with `seed`.
pub fn derive_seed(seed: u64, tag: u64) -> u64 {
    let mut z = seed ^ tag.wrapping_add(1).wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

pub fn ground_space(h: &HamiltonianOperator, prep: &PreparationConfig) -> Result<GroundSpace> {
    Ok(exact_ground_state(h, prep.degeneracy_window)?)
}

/// Equal-weight average of each observable over the ground-space basis.
pub fn ground_average(space: &GroundSpace, observables: &[PauliString]) -> Result<Vec<f64>> {
    let d = space.degeneracy() as f64;
    observables
        .iter()
        .map(|o| {
            let total: f64 = space.states.iter().map(|s| s.expectation(o)).sum::<sptforge_core::Result<f64>>()?;
            Ok(total / d)
        })
        .collect()
}

#[derive(Debug, Clone, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BetaSource {
    Fixed,
    Schedule { fidelity: f64 },
    Fallback { reason: String },
}

pub fn choose_beta(h: &HamiltonianOperator, input: &Statevector, prep: &PreparationConfig) -> (f64, BetaSource) {
    if let Some(beta) = prep.beta {
        return (beta, BetaSource::Fixed);
    }
    match beta_schedule(h, input, prep.target_fidelity) {
        Ok(choice) => (choice.beta, BetaSource::Schedule { fidelity: choice.fidelity }),
        Err(e) => (prep.fallback_beta, BetaSource::Fallback { reason: e.to_string() }),
    }
}

/// Summary of one compiled preparation, written alongside figure data.
#[derive(Debug, Clone, Serialize)]
pub struct CompileRecord {
    pub label: String,
    pub seed: u64,
    pub beta: Option<f64>,
    pub beta_source: Option<BetaSource>,
    pub success_prob: Option<f64>,
    pub layers: usize,
    pub ecr_count: usize,
    pub cost: f64,
    pub converged: bool,
    pub iterations: usize,
    pub attempts: Vec<(usize, f64)>,
    pub params: Vec<f64>,
}

impl CompileRecord {
    fn new(label: String, seed: u64, compiled: &CompiledCircuit) -> Self {
        Self {
            label,
            seed,
            beta: None,
            beta_source: None,
            success_prob: None,
            layers: compiled.circuit.n_layers(),
            ecr_count: compiled.circuit.ecr_count(),
            cost: compiled.report.final_cost,
            converged: compiled.converged(),
            iterations: compiled.report.iterations,
            attempts: compiled.attempts.clone(),
            params: compiled.circuit.params.clone(),
        }
    }
}

/// A trained circuit, the state it was trained on, and its noiseless output.
pub struct Prepared {
    pub input: Statevector,
    pub compiled: CompiledCircuit,
    pub output: Statevector,
    pub record: CompileRecord,
}

/// QITE → compiled ansatz for the configured initial state and `β`.
pub fn prepare_ground(h: &HamiltonianOperator, cfg: &ExperimentConfig, seed: u64, label: String) -> Result<Prepared> {
    let input = initial_state(&cfg.preparation.initial, h.n_qubits())?;
    let (beta, source) = choose_beta(h, &input, &cfg.preparation);
    let qite = qite_prepare(h, beta, &input)?;
    let objective = Objective::new(input.clone(), qite.state)?;
    let compiled = compile(h.n_qubits(), &objective, &cfg.ansatz.compile_options(seed))?;
    let output = compiled.circuit.evaluate(&input)?;
    let mut record = CompileRecord::new(label, seed, &compiled);
    record.beta = Some(beta);
    record.beta_source = Some(source);
    record.success_prob = Some(qite.success_prob);
    Ok(Prepared { input, compiled, output, record })
}

/// Compiled circuit reproducing `u|input>`.
pub fn prepare_unitary(u: &GateOp, input: &Statevector, cfg: &ExperimentConfig, seed: u64, label: String) -> Result<Prepared> {
    let objective = Objective::unitary(u, input)?;
    let compiled = compile(input.n_qubits(), &objective, &cfg.ansatz.compile_options(seed))?;
    let output = compiled.circuit.evaluate(input)?;
    let record = CompileRecord::new(label, seed, &compiled);
    Ok(Prepared { input: input.clone(), compiled, output, record })
}

impl Prepared {
    pub fn fidelity_to(&self, reference: &Statevector) -> Result<f64> {
        Ok(overlap_fidelity(&self.output, reference)?)
    }

    /// Folded noisy runs of the trained circuit, extrapolated to zero noise.
    pub fn mitigate(&self, observables: &[PauliString], cfg: &ExperimentConfig, seed: u64) -> Result<Vec<ZneResult>> {
        let noise = cfg.noise.model(derive_seed(seed, 1))?;
        Ok(zne_expectations(&self.compiled.circuit, &self.input, observables, &noise, &cfg.zne_settings(), derive_seed(seed, 2))?)
    }
}
