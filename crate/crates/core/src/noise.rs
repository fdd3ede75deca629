//! Device-noise emulation: two-qubit depolarizing error after every ECR,
//! unravelled into Pauli trajectories, and independent readout bit flips.
//!
//! Single-qubit rotations are noiseless. Every random draw derives from
//! `NoiseModel::seed` through a ChaCha stream per trajectory, so results do
//! not depend on thread scheduling.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ansatz::LayeredCircuit;
use crate::error::{Result, SimError};
use crate::linalg::pairwise_sum;
use crate::pauli::{Pauli, PauliString};
use crate::qstate::{DensityMatrix, GateKind, GateOp, MeasurementRecord, Statevector};

pub const DEFAULT_P_ECR: f64 = 0.005;
pub const DEFAULT_P_READOUT: f64 = 0.006;
pub const MAX_REFERENCE_QUBITS: usize = 6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    pub p_ecr: f64,
    pub p_readout: f64,
    pub seed: u64,
}

impl Default for NoiseModel {
    fn default() -> Self {
        Self { p_ecr: DEFAULT_P_ECR, p_readout: DEFAULT_P_READOUT, seed: 0 }
    }
}

impl NoiseModel {
    pub fn new(p_ecr: f64, p_readout: f64, seed: u64) -> Result<Self> {
        let m = Self { p_ecr, p_readout, seed };
        m.validate()?;
        Ok(m)
    }

    pub fn noiseless(seed: u64) -> Self {
        Self { p_ecr: 0.0, p_readout: 0.0, seed }
    }

    pub fn with_seed(self, seed: u64) -> Self {
        Self { seed, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, p) in [("p_ecr", self.p_ecr), ("p_readout", self.p_readout)] {
            if !(0.0..=1.0).contains(&p) {
                return Err(SimError::InvalidArgument(format!("{name} = {p} is not a probability")));
            }
        }
        Ok(())
    }

    fn rng(&self, stream: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(stream);
        rng
    }
}

const LETTERS: [Pauli; 4] = [Pauli::I, Pauli::X, Pauli::Y, Pauli::Z];

/// The 15 non-identity two-qubit Paulis, first letter on `a`.
fn two_qubit_paulis() -> impl Iterator<Item = (Pauli, Pauli)> {
    (1..16).map(|k| (LETTERS[k % 4], LETTERS[k / 4]))
}

fn apply_letter(state: &mut Statevector, q: usize, p: Pauli) {
    if p != Pauli::I {
        state.apply_1q(q, &p.matrix());
    }
}

/// One noisy pure-state trajectory through `gates`.
pub fn run_trajectory(
    gates: &[GateOp],
    input: &Statevector,
    model: &NoiseModel,
    trajectory: u64,
) -> Result<Statevector> {
    let mut rng = model.rng(trajectory);
    let mut state = input.clone();
    for gate in gates {
        state.apply(gate)?;
        if matches!(gate.kind, GateKind::Ecr) && model.p_ecr > 0.0 && rng.gen::<f64>() < model.p_ecr {
            let k = rng.gen_range(1..16);
            apply_letter(&mut state, gate.targets[0], LETTERS[k % 4]);
            apply_letter(&mut state, gate.targets[1], LETTERS[k / 4]);
        }
    }
    Ok(state)
}

/// `trajectories` independent noisy outputs, in trajectory order.
pub fn sample_trajectories(
    gates: &[GateOp],
    input: &Statevector,
    model: &NoiseModel,
    trajectories: usize,
) -> Result<Vec<Statevector>> {
    model.validate()?;
    if trajectories == 0 {
        return Err(SimError::InvalidArgument("trajectory count must be positive".into()));
    }
    (0..trajectories as u64)
        .into_par_iter()
        .map(|t| run_trajectory(gates, input, model, t))
        .collect()
}

/// Trajectory-averaged expectations with standard errors of the mean.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoisyEstimate {
    pub means: Vec<f64>,
    pub std_errs: Vec<f64>,
    pub trajectories: usize,
}

/// Mean and standard error of the mean, summed pairwise.
pub fn mean_and_sem(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = pairwise_sum(xs) / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let dev: Vec<f64> = xs.iter().map(|x| (x - mean).powi(2)).collect();
    let var = pairwise_sum(&dev) / (n - 1.0);
    (mean, (var / n).sqrt())
}

pub fn noisy_evaluate(
    circuit: &LayeredCircuit,
    input: &Statevector,
    model: &NoiseModel,
    trajectories: usize,
    observables: &[PauliString],
) -> Result<NoisyEstimate> {
    let states = sample_trajectories(&circuit.gates(), input, model, trajectories)?;
    let per_obs = observables
        .iter()
        .map(|o| states.iter().map(|s| s.expectation(o)).collect::<Result<Vec<f64>>>())
        .collect::<Result<Vec<_>>>()?;
    let (means, std_errs) = per_obs.iter().map(|v| mean_and_sem(v)).unzip();
    Ok(NoisyEstimate { means, std_errs, trajectories })
}

/// Flips each bit of each shot independently with probability `p_readout`.
pub fn apply_readout_error(record: &MeasurementRecord, model: &NoiseModel) -> MeasurementRecord {
    if model.p_readout == 0.0 {
        return record.clone();
    }
    let mut rng = model.rng(record.seed ^ 0x5eed_0000_0000_0000);
    let mut counts: BTreeMap<String, u64> = BTreeMap::new();
    for (bits, &n) in &record.counts {
        for _ in 0..n {
            let flipped: String = bits
                .chars()
                .map(|c| {
                    let flip = model.p_readout >= 1.0 || rng.gen::<f64>() < model.p_readout;
                    match (c, flip) {
                        ('0', true) => '1',
                        ('1', true) => '0',
                        (c, _) => c,
                    }
                })
                .collect();
            *counts.entry(flipped).or_default() += 1;
        }
    }
    MeasurementRecord { counts, ..record.clone() }
}

/// Exact density matrix of the noisy circuit, `ρ → (1−p)ρ + p/15 Σ PρP` after each ECR.
pub fn density_matrix_reference_gates(
    gates: &[GateOp],
    input: &DensityMatrix,
    model: &NoiseModel,
) -> Result<DensityMatrix> {
    let n = input.n_qubits();
    if n > MAX_REFERENCE_QUBITS {
        return Err(SimError::DimensionTooLarge(n));
    }
    model.validate()?;
    let mut rho = input.clone();
    for gate in gates {
        rho.apply_gate(gate)?;
        if matches!(gate.kind, GateKind::Ecr) && model.p_ecr > 0.0 {
            let (a, b) = (gate.targets[0], gate.targets[1]);
            let mut mixed = rho.matrix() * num_complex::Complex64::new(1.0 - model.p_ecr, 0.0);
            for (pa, pb) in two_qubit_paulis() {
                let p = PauliString::from_sites(n, &[(a, pa), (b, pb)])?;
                mixed += rho.conjugate_by_pauli(&p)? * num_complex::Complex64::new(model.p_ecr / 15.0, 0.0);
            }
            rho.set_matrix(mixed);
        }
    }
    Ok(rho)
}

pub fn density_matrix_reference(
    circuit: &LayeredCircuit,
    input: &Statevector,
    model: &NoiseModel,
) -> Result<DensityMatrix> {
    if input.n_qubits() > MAX_REFERENCE_QUBITS {
        return Err(SimError::DimensionTooLarge(input.n_qubits()));
    }
    density_matrix_reference_gates(&circuit.gates(), &DensityMatrix::from_pure(input), model)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::max_abs_diff;

    fn random_circuit(n: usize, layers: usize, seed: u64) -> LayeredCircuit {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut c = LayeredCircuit::new(n, layers);
        c.params.iter_mut().for_each(|p| *p = rng.gen_range(-3.0..3.0));
        c
    }

    fn z(n: usize, q: usize) -> PauliString {
        PauliString::single(n, q, Pauli::Z).unwrap()
    }

    #[test]
    fn probabilities_are_validated() {
        assert!(NoiseModel::new(-0.1, 0.0, 0).is_err());
        assert!(NoiseModel::new(0.0, 1.5, 0).is_err());
        assert!(NoiseModel::new(0.005, 0.006, 0).is_ok());
    }

    #[test]
    fn zero_noise_matches_noiseless_exactly() {
        let c = random_circuit(3, 2, 1);
        let psi = Statevector::plus(3);
        let exact = c.evaluate(&psi).unwrap();
        let model = NoiseModel::noiseless(4);
        let est = noisy_evaluate(&c, &psi, &model, 5, &[z(3, 0), z(3, 2)]).unwrap();
        assert_eq!(est.means[0], exact.expectation(&z(3, 0)).unwrap());
        assert_eq!(est.std_errs[1], 0.0);
        let rho = density_matrix_reference(&c, &psi, &model).unwrap();
        let pure = DensityMatrix::from_pure(&exact);
        assert!(max_abs_diff(rho.matrix(), pure.matrix()) < 1e-12);
    }

    #[test]
    fn zero_trajectories_is_an_error() {
        let c = random_circuit(2, 1, 1);
        assert!(noisy_evaluate(&c, &Statevector::zero(2), &NoiseModel::default(), 0, &[]).is_err());
    }

    #[test]
    fn single_ecr_channel_matches_trajectories() {
        let p = 0.3;
        let model = NoiseModel::new(p, 0.0, 11).unwrap();
        let gates = vec![GateOp::ecr(0, 1)];
        let psi = Statevector::zero(2);
        let ideal = psi.clone().with_gate(&gates[0]).unwrap();
        let rho = density_matrix_reference_gates(&gates, &DensityMatrix::from_pure(&psi), &model).unwrap();
        assert!((rho.trace().re - 1.0).abs() < 1e-12);
        let exact_f = rho.fidelity_with_pure(&ideal).unwrap();
        let states = sample_trajectories(&gates, &psi, &model, 20000).unwrap();
        let fs: Vec<f64> = states.iter().map(|s| s.inner(&ideal).unwrap().norm_sqr()).collect();
        let (mean, sem) = mean_and_sem(&fs);
        assert!((mean - exact_f).abs() < 4.0 * sem, "{mean} vs {exact_f} ± {sem}");
        assert!(exact_f < 1.0 && exact_f > 1.0 - p);
    }

    #[test]
    fn trajectory_mean_agrees_with_exact_channel() {
        let c = random_circuit(4, 2, 5);
        let model = NoiseModel::new(0.05, 0.0, 21).unwrap();
        let psi = Statevector::zero(4);
        let rho = density_matrix_reference(&c, &psi, &model).unwrap();
        assert!((rho.trace().re - 1.0).abs() < 1e-10);
        let obs: Vec<PauliString> = (0..4).map(|q| z(4, q)).chain(["XXII".parse().unwrap()]).collect();
        let est = noisy_evaluate(&c, &psi, &model, 10000, &obs).unwrap();
        for (k, o) in obs.iter().enumerate() {
            let exact = rho.expectation(o).unwrap();
            assert!((est.means[k] - exact).abs() < 4.0 * est.std_errs[k].max(1e-12), "{o}");
        }
    }

    #[test]
    fn maximally_mixed_is_a_fixed_point() {
        let c = random_circuit(3, 2, 8);
        let model = NoiseModel::new(0.2, 0.0, 0).unwrap();
        let out = density_matrix_reference_gates(&c.gates(), &DensityMatrix::maximally_mixed(3), &model).unwrap();
        assert!(max_abs_diff(out.matrix(), DensityMatrix::maximally_mixed(3).matrix()) < 1e-12);
    }

    #[test]
    fn fidelity_decreases_with_depth() {
        let model = NoiseModel::new(0.02, 0.0, 0).unwrap();
        let psi = Statevector::plus(3);
        let mut last = 1.0;
        for layers in [0, 2, 4, 6] {
            // Identity-rotation layers in mirrored pairs: same noiseless output.
            let c = LayeredCircuit::new(3, layers);
            let ideal = c.evaluate(&psi).unwrap();
            let f = density_matrix_reference(&c, &psi, &model).unwrap().fidelity_with_pure(&ideal).unwrap();
            assert!(f <= last + 1e-12, "layers {layers}: {f} > {last}");
            last = f;
        }
        assert!(last < 0.99);
    }

    #[test]
    fn reference_rejects_large_registers() {
        let c = LayeredCircuit::new(7, 1);
        assert!(matches!(
            density_matrix_reference(&c, &Statevector::zero(7), &NoiseModel::default()),
            Err(SimError::DimensionTooLarge(7))
        ));
    }

    #[test]
    fn readout_error_statistics() {
        let record = crate::qstate::sample(&Statevector::zero(3), &[], 20000, 1).unwrap();
        assert_eq!(apply_readout_error(&record, &NoiseModel::noiseless(0)), record);

        let noisy = apply_readout_error(&record, &NoiseModel::new(0.0, 0.006, 3).unwrap());
        assert_eq!(noisy.counts.values().sum::<u64>(), 20000);
        let sigma = (0.006f64 * 0.994 / 20000.0).sqrt();
        for q in 0..3 {
            assert!((noisy.marginal(q, 1) - 0.006).abs() < 3.0 * sigma);
        }

        let all = apply_readout_error(&record, &NoiseModel::new(0.0, 1.0, 3).unwrap());
        assert_eq!(all.counts.get("111"), Some(&20000));
    }

    #[test]
    fn seeded_determinism() {
        let c = random_circuit(3, 2, 2);
        let model = NoiseModel::new(0.1, 0.0, 77).unwrap();
        let a = noisy_evaluate(&c, &Statevector::zero(3), &model, 300, &[z(3, 1)]).unwrap();
        let b = noisy_evaluate(&c, &Statevector::zero(3), &model, 300, &[z(3, 1)]).unwrap();
        assert_eq!(a, b);
    }
}
