use std::collections::BTreeMap;
use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{index_to_bitstring, GateOp, Statevector};
use crate::error::{Result, SimError};
use crate::pauli::Pauli;

/// Shot counts for one measurement setting. Bitstring keys list qubit 0 first.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MeasurementRecord {
    pub basis: Vec<Pauli>,
    pub shots: u64,
    pub counts: BTreeMap<String, u64>,
    pub seed: u64,
}

impl MeasurementRecord {
    pub fn n_qubits(&self) -> usize {
        self.basis.len()
    }

    /// Mean of `∏_{q ∈ sites} (-1)^{bit_q}` over all shots.
    pub fn parity_mean(&self, sites: &[usize]) -> f64 {
        if self.shots == 0 {
            return 0.0;
        }
        let mut acc: i64 = 0;
        for (bits, &n) in &self.counts {
            let b = bits.as_bytes();
            let ones = sites.iter().filter(|&&q| b[q] == b'1').count();
            let sign: i64 = if ones % 2 == 0 { 1 } else { -1 };
            acc += sign * n as i64;
        }
        acc as f64 / self.shots as f64
    }

    /// Frequency of outcome `bit` on qubit `q`.
    pub fn marginal(&self, q: usize, bit: u8) -> f64 {
        let want = if bit == 0 { b'0' } else { b'1' };
        let hits: u64 =
            self.counts.iter().filter(|(k, _)| k.as_bytes()[q] == want).map(|(_, n)| n).sum();
        hits as f64 / self.shots as f64
    }
}

/// Rotations that map the eigenbasis of each letter onto the computational basis.
/// `I` and `Z` need nothing.
pub fn basis_rotations(basis: &[Pauli]) -> Vec<GateOp> {
    basis
        .iter()
        .enumerate()
        .filter_map(|(q, p)| match p {
            Pauli::X => Some(GateOp::hadamard(q)),
            Pauli::Y => Some(GateOp::u3(q, PI / 2.0, 0.0, PI / 2.0)),
            _ => None,
        })
        .collect()
}

fn cumulative(state: &Statevector) -> Vec<f64> {
    let mut acc = 0.0;
    state
        .amplitudes()
        .iter()
        .map(|a| {
            acc += a.norm_sqr();
            acc
        })
        .collect()
}

fn draw(cdf: &[f64], rng: &mut ChaCha8Rng) -> usize {
    let total = *cdf.last().unwrap();
    let u = rng.gen::<f64>() * total;
    cdf.partition_point(|&c| c <= u).min(cdf.len() - 1)
}

/// Samples `shots` computational-basis outcomes after applying `rotations`.
pub fn sample(
    state: &Statevector,
    rotations: &[GateOp],
    shots: u64,
    seed: u64,
) -> Result<MeasurementRecord> {
    sample_ensemble(std::slice::from_ref(state), rotations, shots, seed)
}

/// Samples an equal-weight ensemble of pure states (for example noise
/// trajectories). Shot `s` is drawn from member `s mod len`.
pub fn sample_ensemble(
    states: &[Statevector],
    rotations: &[GateOp],
    shots: u64,
    seed: u64,
) -> Result<MeasurementRecord> {
    if shots == 0 {
        return Err(SimError::ZeroShots);
    }
    let first = states.first().ok_or(SimError::EmptySubsystem)?;
    let n = first.n_qubits();
    let cdfs = states
        .iter()
        .map(|s| {
            let mut rotated = s.clone();
            rotated.apply_all(rotations)?;
            Ok(cumulative(&rotated))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut by_index: BTreeMap<usize, u64> = BTreeMap::new();
    for s in 0..shots as usize {
        let k = draw(&cdfs[s % cdfs.len()], &mut rng);
        *by_index.entry(k).or_default() += 1;
    }
    let counts = by_index.into_iter().map(|(k, c)| (index_to_bitstring(k, n), c)).collect();
    Ok(MeasurementRecord { basis: vec![Pauli::Z; n], shots, counts, seed })
}

/// Samples an ensemble in a per-qubit Pauli basis and labels the record with it.
pub fn sample_in_basis(
    states: &[Statevector],
    basis: &[Pauli],
    shots: u64,
    seed: u64,
) -> Result<MeasurementRecord> {
    let mut rec = sample_ensemble(states, &basis_rotations(basis), shots, seed)?;
    rec.basis = basis.iter().map(|&p| if p == Pauli::I { Pauli::Z } else { p }).collect();
    Ok(rec)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_state_always_reads_zero() {
        let rec = sample(&Statevector::zero(1), &[], 100, 1).unwrap();
        assert_eq!(rec.counts.get("0"), Some(&100));
        assert_eq!(rec.counts.len(), 1);
    }

    #[test]
    fn plus_state_is_balanced_within_three_sigma() {
        let shots = 20_000u64;
        let rec = sample(&Statevector::plus(1), &[], shots, 42).unwrap();
        let p0 = rec.marginal(0, 0);
        let sigma = (0.25 / shots as f64).sqrt();
        assert!((p0 - 0.5).abs() < 3.0 * sigma, "p0 = {p0}");
    }

    #[test]
    fn sampling_is_deterministic_per_seed() {
        let s = Statevector::plus(3);
        let a = sample(&s, &[], 500, 7).unwrap();
        let b = sample(&s, &[], 500, 7).unwrap();
        assert_eq!(a, b);
        let c = sample(&s, &[], 500, 8).unwrap();
        assert_ne!(a.counts, c.counts);
    }

    #[test]
    fn zero_shots_is_an_error() {
        assert_eq!(sample(&Statevector::zero(1), &[], 0, 0).unwrap_err(), SimError::ZeroShots);
    }

    #[test]
    fn x_and_y_rotations_diagonalize_their_eigenstates() {
        let plus = Statevector::plus(1);
        let rec = sample_in_basis(&[plus.clone()], &[Pauli::X], 200, 3).unwrap();
        assert_eq!(rec.counts.get("0"), Some(&200));
        assert_eq!(rec.basis, vec![Pauli::X]);

        // |+i> = S|+>
        let plus_i = plus.with_gate(&GateOp::u3(0, 0.0, 0.0, PI / 2.0)).unwrap();
        let rec = sample_in_basis(&[plus_i], &[Pauli::Y], 200, 3).unwrap();
        assert_eq!(rec.counts.get("0"), Some(&200));
        assert_eq!(rec.basis, vec![Pauli::Y]);
    }

    #[test]
    fn parity_mean_uses_selected_sites() {
        let s = Statevector::from_bitstring("10").unwrap();
        let rec = sample(&s, &[], 10, 0).unwrap();
        assert_eq!(rec.parity_mean(&[0]), -1.0);
        assert_eq!(rec.parity_mean(&[1]), 1.0);
        assert_eq!(rec.parity_mean(&[0, 1]), -1.0);
    }
}
