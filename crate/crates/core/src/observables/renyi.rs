use serde::{Deserialize, Serialize};

use crate::dilation::{dilate, propagator, ScalePolicy};
use crate::error::{Result, SimError};
use crate::linalg::{kron, max_abs_diff};
use crate::model::HamiltonianOperator;
use crate::noise::{apply_readout_error, NoiseModel};
use crate::qstate::{sample_ensemble, GateOp, Statevector};

/// `|ψ₁⟩|ψ₂⟩` on `2L` qubits, copy 1 on qubits `0..L`, copy 2 on `L..2L`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TwoCopyState {
    l: usize,
    state: Statevector,
}

impl TwoCopyState {
    pub fn from_state(psi: &Statevector) -> Self {
        Self { l: psi.n_qubits(), state: psi.tensor(psi) }
    }

    /// Wraps an already prepared `2L`-qubit register.
    pub fn from_register(state: Statevector) -> Result<Self> {
        if state.n_qubits() % 2 != 0 {
            return Err(SimError::InvalidArgument("two-copy register needs an even qubit count".into()));
        }
        Ok(Self { l: state.n_qubits() / 2, state })
    }

    pub fn l(&self) -> usize {
        self.l
    }

    pub fn state(&self) -> &Statevector {
        &self.state
    }

    /// Largest elementwise difference between the two copies' reduced states.
    pub fn copy_mismatch(&self) -> Result<f64> {
        let a = self.state.reduced_density(&(0..self.l).collect::<Vec<_>>())?;
        let b = self.state.reduced_density(&(self.l..2 * self.l).collect::<Vec<_>>())?;
        Ok(max_abs_diff(a.matrix(), b.matrix()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RenyiValue {
    /// `R²ₓ = ⟨SWAPₓ⟩`.
    pub r2: f64,
    /// `S²ₓ = −ln R²ₓ`.
    pub s2: f64,
}

impl RenyiValue {
    pub fn from_r2(r2: f64) -> Self {
        Self { r2, s2: 0.0 - r2.ln() }
    }
}

fn swap_index(k: usize, l: usize, x: usize) -> usize {
    let mask = (1usize << x) - 1;
    let lo = k & mask;
    let hi = (k >> l) & mask;
    (k & !(mask | (mask << l))) | hi | (lo << l)
}

/// `⟨ψ₁ψ₂|SWAP_sub(x)|ψ₁ψ₂⟩`, swapping sites `0..x` between the copies.
pub fn renyi2_swap(two_copy: &TwoCopyState, x: usize) -> Result<RenyiValue> {
    let l = two_copy.l;
    if x > l {
        return Err(SimError::InvalidArgument(format!("subsystem size {x} exceeds chain length {l}")));
    }
    let a = two_copy.state.amplitudes();
    let r2: f64 = a.iter().enumerate().map(|(k, v)| (v.conj() * a[swap_index(k, l, x)]).re).sum();
    Ok(RenyiValue::from_r2(r2))
}

/// Prepared QAE registers: the two copies on `0..2L`, the postselection
/// ancilla `A₀` at `2L` and the estimation ancilla `A₁` at `2L+1`. Several
/// members form an equal-weight ensemble (for example noise trajectories).
#[derive(Debug, Clone)]
pub struct QaeCircuit {
    l: usize,
    members: Vec<Statevector>,
}

impl QaeCircuit {
    pub fn from_two_copy(state: &TwoCopyState) -> Self {
        Self::from_ensemble(std::slice::from_ref(state)).expect("one member")
    }

    pub fn from_ensemble(states: &[TwoCopyState]) -> Result<Self> {
        let l = states.first().ok_or(SimError::EmptySubsystem)?.l;
        if states.iter().any(|s| s.l != l) {
            return Err(SimError::InvalidArgument("ensemble members differ in size".into()));
        }
        let members = states.iter().map(|s| s.state.tensor(&Statevector::zero(2))).collect();
        Ok(Self { l, members })
    }

    /// Two-copy QITE: the dilation of `e^{−βH}⊗e^{−βH}` with its ancilla on
    /// `A₁`, followed by `SWAP(A₁, A₀)` so that postselection moves to `A₀`
    /// and `A₁` returns to `|0⟩` for the estimation step.
    pub fn from_dilation(h: &HamiltonianOperator, beta: f64, initial: &Statevector) -> Result<Self> {
        let l = h.n_qubits();
        if initial.n_qubits() != l {
            return Err(SimError::DimensionMismatch { expected: l, got: initial.n_qubits() });
        }
        let single = propagator(h, beta)?;
        let dilated = dilate(&kron(&single, &single), ScalePolicy::InverseMaxSingular)?;
        let mut targets: Vec<usize> = (0..2 * l).collect();
        targets.push(2 * l + 1);
        let mut reg = initial.tensor(initial).tensor(&Statevector::zero(2));
        reg.apply(&dilated.gate_on(targets)?)?;
        reg.apply(&GateOp::swap(2 * l + 1, 2 * l))?;
        Ok(Self { l, members: vec![reg] })
    }

    pub fn l(&self) -> usize {
        self.l
    }

    pub fn a0(&self) -> usize {
        2 * self.l
    }

    pub fn a1(&self) -> usize {
        2 * self.l + 1
    }

    /// Registers after `H(A₁) · C-SWAP_sub(x) · H(A₁)`.
    pub fn measured(&self, x: usize) -> Result<Vec<Statevector>> {
        if x > self.l {
            return Err(SimError::InvalidArgument(format!("subsystem size {x} exceeds chain length {}", self.l)));
        }
        let a1 = self.a1();
        let mut gates = vec![GateOp::hadamard(a1)];
        gates.extend((0..x).map(|i| GateOp::cswap(a1, i, self.l + i)));
        gates.push(GateOp::hadamard(a1));
        self.members
            .iter()
            .map(|m| {
                let mut s = m.clone();
                s.apply_all(&gates)?;
                Ok(s)
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum QaeMode {
    /// Exact outcome probabilities.
    Analytic,
    Shots { shots: u64, seed: u64, readout: Option<NoiseModel>, min_kept: u64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QaeEstimate {
    /// `2P(0) − 1`, an estimate of `R²ₓ`.
    pub value: f64,
    /// `P(A₁ = 0 | A₀ = 0)`.
    pub p0: f64,
    /// Probability (or kept fraction) of `A₀ = 0`.
    pub postselection_rate: f64,
    pub kept: u64,
    pub std_err: f64,
}

impl QaeEstimate {
    pub fn renyi(&self) -> RenyiValue {
        RenyiValue::from_r2(self.value)
    }
}

pub fn qae_renyi(circuit: &QaeCircuit, x: usize, mode: QaeMode) -> Result<QaeEstimate> {
    let (a0, a1) = (circuit.a0(), circuit.a1());
    let states = circuit.measured(x)?;
    match mode {
        QaeMode::Analytic => {
            let (mut keep, mut zero) = (0.0, 0.0);
            for s in &states {
                for (k, a) in s.amplitudes().iter().enumerate() {
                    if (k >> a0) & 1 == 0 {
                        let p = a.norm_sqr();
                        keep += p;
                        if (k >> a1) & 1 == 0 {
                            zero += p;
                        }
                    }
                }
            }
            let n = states.len() as f64;
            if keep <= 0.0 {
                return Err(SimError::ZeroProbabilityBranch { qubit: a0, outcome: 0 });
            }
            let p0 = zero / keep;
            Ok(QaeEstimate { value: 2.0 * p0 - 1.0, p0, postselection_rate: keep / n, kept: 0, std_err: 0.0 })
        }
        QaeMode::Shots { shots, seed, readout, min_kept } => {
            let mut record = sample_ensemble(&states, &[], shots, seed)?;
            if let Some(noise) = readout {
                record = apply_readout_error(&record, &noise);
            }
            let (mut kept, mut zero) = (0u64, 0u64);
            for (bits, &c) in &record.counts {
                let b = bits.as_bytes();
                if b[a0] == b'0' {
                    kept += c;
                    if b[a1] == b'0' {
                        zero += c;
                    }
                }
            }
            if kept < min_kept.max(1) {
                return Err(SimError::PostselectionStarved { kept, min: min_kept.max(1) });
            }
            let p0 = zero as f64 / kept as f64;
            Ok(QaeEstimate {
                value: 2.0 * p0 - 1.0,
                p0,
                postselection_rate: kept as f64 / shots as f64,
                kept,
                std_err: 2.0 * (p0 * (1.0 - p0) / kept as f64).sqrt(),
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{build_hamiltonian, exact_ground_state, IsingClusterParams};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn purity(psi: &Statevector, x: usize) -> f64 {
        if x == 0 {
            return 1.0;
        }
        psi.reduced_density(&(0..x).collect::<Vec<_>>()).unwrap().purity()
    }

    #[test]
    fn swap_equals_purity_on_random_states() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..5 {
            let psi = Statevector::random(4, &mut rng);
            let tc = TwoCopyState::from_state(&psi);
            assert!(tc.copy_mismatch().unwrap() < 1e-12);
            for x in 0..=4 {
                let r = renyi2_swap(&tc, x).unwrap();
                assert!((r.r2 - purity(&psi, x)).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn trivial_cases() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let psi = Statevector::random(3, &mut rng);
        let r = renyi2_swap(&TwoCopyState::from_state(&psi), 0).unwrap();
        assert!((r.r2 - 1.0).abs() < 1e-12 && r.s2.abs() < 1e-12);
        let product = Statevector::plus(3);
        for x in 0..=3 {
            assert!((renyi2_swap(&TwoCopyState::from_state(&product), x).unwrap().r2 - 1.0).abs() < 1e-12);
        }
        assert!(renyi2_swap(&TwoCopyState::from_state(&product), 4).is_err());
        assert!(TwoCopyState::from_register(Statevector::zero(3)).is_err());
    }

    #[test]
    fn ground_state_half_chain_entropy_is_near_ln2() {
        let h = build_hamiltonian(&IsingClusterParams::new(1.0, 1.0, 2.5, 4).unwrap()).unwrap();
        let gs = exact_ground_state(&h, 1e-9).unwrap().states[0].clone();
        let s2 = renyi2_swap(&TwoCopyState::from_state(&gs), 2).unwrap().s2;
        assert!((s2 - 0.7137).abs() < 1e-3, "{s2}");
    }

    #[test]
    fn analytic_qae_matches_swap() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..3 {
            let psi = Statevector::random(3, &mut rng);
            let tc = TwoCopyState::from_state(&psi);
            let circ = QaeCircuit::from_two_copy(&tc);
            for x in 0..=3 {
                let q = qae_renyi(&circ, x, QaeMode::Analytic).unwrap();
                assert!((q.value - renyi2_swap(&tc, x).unwrap().r2).abs() < 1e-9);
                assert!((q.postselection_rate - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn dilated_preparation_matches_qite_purity() {
        let h = build_hamiltonian(&IsingClusterParams::new(1.0, 1.0, 2.5, 3).unwrap()).unwrap();
        let init = Statevector::plus(3);
        let beta = 1.0;
        let circ = QaeCircuit::from_dilation(&h, beta, &init).unwrap();
        let (post, p) = crate::dilation::qite_prepare(&h, beta, &init).map(|o| (o.state, o.success_prob)).unwrap();
        let tc = TwoCopyState::from_state(&post);
        for x in 0..=3 {
            let q = qae_renyi(&circ, x, QaeMode::Analytic).unwrap();
            assert!((q.value - renyi2_swap(&tc, x).unwrap().r2).abs() < 1e-9, "x={x}");
            // Both copies must survive their own postselection.
            assert!((q.postselection_rate - p * p).abs() < 1e-9);
        }
    }

    #[test]
    fn shot_qae_within_binomial_error() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let psi = Statevector::random(3, &mut rng);
        let circ = QaeCircuit::from_two_copy(&TwoCopyState::from_state(&psi));
        let exact = qae_renyi(&circ, 2, QaeMode::Analytic).unwrap().value;
        let mode = QaeMode::Shots { shots: 20000, seed: 9, readout: None, min_kept: 100 };
        let est = qae_renyi(&circ, 2, mode).unwrap();
        assert_eq!(est.kept, 20000);
        assert!((est.value - exact).abs() < 4.0 * est.std_err);
        let zero = qae_renyi(&circ, 0, mode).unwrap();
        assert_eq!(zero.value, 1.0);
    }

    #[test]
    fn starvation_is_reported() {
        let h = build_hamiltonian(&IsingClusterParams::new(1.0, 1.0, 2.5, 3).unwrap()).unwrap();
        let circ = QaeCircuit::from_dilation(&h, 1.0, &Statevector::plus(3)).unwrap();
        let mode = QaeMode::Shots { shots: 50, seed: 0, readout: None, min_kept: 1000 };
        assert!(matches!(qae_renyi(&circ, 1, mode), Err(SimError::PostselectionStarved { .. })));
    }
}
