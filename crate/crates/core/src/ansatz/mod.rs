//! Layered ECR + U3 brick circuits and their variational training.
//!
//! One layer is `ECR on bond set A → U3 on every qubit → ECR on bond set B →
//! U3 on every qubit`. A forward layer uses even bonds `(0,1), (2,3), …` first
//! and odd bonds `(1,2), (3,4), …` second; a mirrored layer swaps the two.
//! Because ECR is self-inverse, a forward layer followed by a mirrored one with
//! identity rotations is exactly the identity.

mod cost;
mod document;
mod train;

pub use cost::{cost_postselected, cost_qae, cost_unitary, overlap_fidelity, Objective};
pub use document::CircuitDocument;
pub use train::{compile, train, CompileOptions, CompiledCircuit, TrainOptions, TrainingReport};

use serde::{Deserialize, Serialize};

use crate::error::{Result, SimError};
use crate::qstate::{ecr_matrix, u3_matrix, GateOp, Statevector};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LayerOrder {
    Forward,
    Mirrored,
}

impl LayerOrder {
    pub fn flipped(self) -> Self {
        match self {
            LayerOrder::Forward => LayerOrder::Mirrored,
            LayerOrder::Mirrored => LayerOrder::Forward,
        }
    }
}

/// Elementary step of a layered circuit. `offset` indexes the first of the
/// three U3 angles (θ, φ, λ) in the parameter vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Step {
    Ecr(usize, usize),
    U3 { qubit: usize, offset: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayeredCircuit {
    n_qubits: usize,
    layout: Vec<LayerOrder>,
    pub params: Vec<f64>,
}

pub(crate) fn params_per_layer(n_qubits: usize) -> usize {
    2 * n_qubits * 3
}

fn bonds(n_qubits: usize, parity: usize) -> impl Iterator<Item = (usize, usize)> {
    (parity..n_qubits.saturating_sub(1)).step_by(2).map(|i| (i, i + 1))
}

impl LayeredCircuit {
    /// Alternating forward/mirrored layers with all rotations at identity.
    pub fn new(n_qubits: usize, n_layers: usize) -> Self {
        let layout = (0..n_layers)
            .map(|k| if k % 2 == 0 { LayerOrder::Forward } else { LayerOrder::Mirrored })
            .collect();
        Self::with_layout(n_qubits, layout)
    }

    pub fn with_layout(n_qubits: usize, layout: Vec<LayerOrder>) -> Self {
        let params = vec![0.0; layout.len() * params_per_layer(n_qubits)];
        Self { n_qubits, layout, params }
    }

    pub fn from_parts(n_qubits: usize, layout: Vec<LayerOrder>, params: Vec<f64>) -> Result<Self> {
        let expected = layout.len() * params_per_layer(n_qubits);
        if params.len() != expected {
            return Err(SimError::DimensionMismatch { expected, got: params.len() });
        }
        Ok(Self { n_qubits, layout, params })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn n_layers(&self) -> usize {
        self.layout.len()
    }

    pub fn layout(&self) -> &[LayerOrder] {
        &self.layout
    }

    pub fn n_params(&self) -> usize {
        self.params.len()
    }

    pub fn ecr_count(&self) -> usize {
        self.steps().iter().filter(|s| matches!(s, Step::Ecr(..))).count()
    }

    /// Appends layers with identity rotations.
    pub fn push_identity_layers(&mut self, orders: &[LayerOrder]) {
        self.layout.extend_from_slice(orders);
        self.params.resize(self.layout.len() * params_per_layer(self.n_qubits), 0.0);
    }

    pub fn steps(&self) -> Vec<Step> {
        let n = self.n_qubits;
        let mut out = Vec::new();
        for (k, order) in self.layout.iter().enumerate() {
            let (first, second) = match order {
                LayerOrder::Forward => (0, 1),
                LayerOrder::Mirrored => (1, 0),
            };
            let base = k * params_per_layer(n);
            for (sub, parity) in [(0, first), (1, second)] {
                out.extend(bonds(n, parity).map(|(a, b)| Step::Ecr(a, b)));
                out.extend((0..n).map(|q| Step::U3 { qubit: q, offset: base + (sub * n + q) * 3 }));
            }
        }
        out
    }

    /// The circuit as explicit gates, for noisy execution and inspection.
    pub fn gates(&self) -> Vec<GateOp> {
        self.steps()
            .into_iter()
            .map(|s| match s {
                Step::Ecr(a, b) => GateOp::ecr(a, b),
                Step::U3 { qubit, offset } => {
                    let p = &self.params[offset..offset + 3];
                    GateOp::u3(qubit, p[0], p[1], p[2])
                }
            })
            .collect()
    }

    /// Runs the circuit on `input`.
    pub fn evaluate(&self, input: &Statevector) -> Result<Statevector> {
        self.evaluate_with(&self.params, input)
    }

    pub(crate) fn evaluate_with(&self, params: &[f64], input: &Statevector) -> Result<Statevector> {
        if input.n_qubits() != self.n_qubits {
            return Err(SimError::DimensionMismatch { expected: self.n_qubits, got: input.n_qubits() });
        }
        let mut state = input.clone();
        let ecr = ecr_matrix();
        for step in self.steps() {
            match step {
                Step::Ecr(a, b) => state.apply_2q(a, b, &ecr),
                Step::U3 { qubit, offset } => {
                    let p = &params[offset..offset + 3];
                    state.apply_1q(qubit, &u3_matrix(p[0], p[1], p[2]));
                }
            }
        }
        Ok(state)
    }
}

/// `V|ψ>` for a layered circuit.
pub fn evaluate(circuit: &LayeredCircuit, input: &Statevector) -> Result<Statevector> {
    circuit.evaluate(input)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_circuit(n: usize, layers: usize, seed: u64) -> LayeredCircuit {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut c = LayeredCircuit::new(n, layers);
        c.params.iter_mut().for_each(|p| *p = rng.gen_range(-3.0..3.0));
        c
    }

    #[test]
    fn nine_qubit_layer_has_eight_ecrs() {
        assert_eq!(LayeredCircuit::new(9, 1).ecr_count(), 8);
        assert_eq!(LayeredCircuit::with_layout(9, vec![LayerOrder::Mirrored]).ecr_count(), 8);
    }

    #[test]
    fn zero_layers_is_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let psi = Statevector::random(3, &mut rng);
        assert_eq!(LayeredCircuit::new(3, 0).evaluate(&psi).unwrap(), psi);
    }

    #[test]
    fn mirrored_pair_with_identity_rotations_cancels() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for n in [2, 3, 5] {
            let psi = Statevector::random(n, &mut rng);
            let out = LayeredCircuit::new(n, 2).evaluate(&psi).unwrap();
            let f = out.inner(&psi).unwrap().norm();
            assert!((f - 1.0).abs() < 1e-10);
            // A single identity-rotation layer is not the identity.
            let one = LayeredCircuit::new(n, 1).evaluate(&psi).unwrap();
            assert!(one.inner(&psi).unwrap().norm() < 1.0 - 1e-6);
        }
    }

    #[test]
    fn random_parameters_preserve_norm() {
        let c = random_circuit(4, 3, 8);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let psi = Statevector::random(4, &mut rng);
        assert!((c.evaluate(&psi).unwrap().norm_sqr() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn gate_list_matches_fast_path() {
        let c = random_circuit(4, 2, 12);
        let psi = Statevector::plus(4);
        let fast = c.evaluate(&psi).unwrap();
        let mut slow = psi.clone();
        slow.apply_all(&c.gates()).unwrap();
        assert!((fast.inner(&slow).unwrap().norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let c = LayeredCircuit::new(3, 1);
        assert!(matches!(c.evaluate(&Statevector::zero(2)), Err(SimError::DimensionMismatch { .. })));
        assert!(LayeredCircuit::from_parts(3, vec![LayerOrder::Forward], vec![0.0; 5]).is_err());
    }
}
