use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Result, SimError};
use crate::noise::{apply_readout_error, NoiseModel};
use crate::pauli::{Pauli, PauliString};
use crate::qstate::{sample_in_basis, DensityMatrix, MeasurementRecord, Statevector};

const LETTERS: [Pauli; 4] = [Pauli::I, Pauli::X, Pauli::Y, Pauli::Z];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum TomographyMode {
    /// Exact Pauli expectations, no sampling.
    Analytic,
    Shots { shots_per_basis: u64, seed: u64, readout: Option<NoiseModel>, min_shots: u64 },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TomographyResult {
    pub subsystem: [usize; 3],
    /// `c[a + 4b + 16c]` for letters `(a, b, c)` in `I, X, Y, Z` order on the
    /// three subsystem qubits.
    pub coefficients: Vec<f64>,
    pub rho: DensityMatrix,
    /// The 27 basis settings, empty in analytic mode.
    pub records: Vec<MeasurementRecord>,
}

fn letters_of(index: usize) -> [Pauli; 3] {
    [LETTERS[index % 4], LETTERS[(index / 4) % 4], LETTERS[index / 16]]
}

fn embed(n: usize, subsystem: &[usize; 3], letters: &[Pauli; 3]) -> PauliString {
    let mut full = vec![Pauli::I; n];
    for (q, p) in subsystem.iter().zip(letters) {
        full[*q] = *p;
    }
    PauliString::new(Complex64::new(1.0, 0.0), full)
}

/// Linear-inversion estimate `ρ_A = ⅛ Σ c_S S` of the reduced state on three
/// qubits of an equal-weight ensemble. In shot mode every coefficient pools
/// all basis settings that agree with it on its non-identity positions.
pub fn tomography_3q(
    states: &[Statevector],
    subsystem: &[usize],
    mode: TomographyMode,
) -> Result<TomographyResult> {
    let first = states.first().ok_or(SimError::EmptySubsystem)?;
    let n = first.n_qubits();
    let sub: [usize; 3] = subsystem
        .try_into()
        .map_err(|_| SimError::InvalidArgument(format!("tomography needs exactly 3 qubits, got {}", subsystem.len())))?;
    for &q in &sub {
        if q >= n {
            return Err(SimError::QubitOutOfRange { index: q, n_qubits: n });
        }
    }
    if sub[0] == sub[1] || sub[1] == sub[2] || sub[0] == sub[2] {
        return Err(SimError::DuplicateTargets(sub.to_vec()));
    }

    let (coefficients, records) = match mode {
        TomographyMode::Analytic => {
            let coeffs = (0..64)
                .map(|i| {
                    let p = embed(n, &sub, &letters_of(i));
                    let sum: f64 = states.iter().map(|s| s.expectation(&p)).sum::<Result<f64>>()?;
                    Ok(sum / states.len() as f64)
                })
                .collect::<Result<Vec<f64>>>()?;
            (coeffs, Vec::new())
        }
        TomographyMode::Shots { shots_per_basis, seed, readout, min_shots } => {
            if shots_per_basis < min_shots.max(1) {
                return Err(SimError::InvalidArgument(format!(
                    "{shots_per_basis} shots per basis is below the floor of {}",
                    min_shots.max(1)
                )));
            }
            // Settings use letters X, Y, Z only: index 1..=3 per position.
            let settings: Vec<[Pauli; 3]> =
                (0..27).map(|s| [LETTERS[1 + s % 3], LETTERS[1 + (s / 3) % 3], LETTERS[1 + s / 9]]).collect();
            let records = settings
                .par_iter()
                .enumerate()
                .map(|(k, letters)| {
                    let basis = embed(n, &sub, letters).letters;
                    let rec = sample_in_basis(states, &basis, shots_per_basis, seed.wrapping_add(k as u64))?;
                    Ok(match readout {
                        Some(noise) => apply_readout_error(&rec, &noise),
                        None => rec,
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            let coeffs = (0..64)
                .map(|i| {
                    let want = letters_of(i);
                    let sites: Vec<usize> =
                        (0..3).filter(|&j| want[j] != Pauli::I).map(|j| sub[j]).collect();
                    let (mut acc, mut shots) = (0.0, 0u64);
                    for (letters, rec) in settings.iter().zip(&records) {
                        if (0..3).all(|j| want[j] == Pauli::I || want[j] == letters[j]) {
                            acc += rec.parity_mean(&sites) * rec.shots as f64;
                            shots += rec.shots;
                        }
                    }
                    acc / shots as f64
                })
                .collect();
            (coeffs, records)
        }
    };

    let mut rho = DMatrix::<Complex64>::zeros(8, 8);
    for (i, c) in coefficients.iter().enumerate() {
        if *c != 0.0 {
            let s = PauliString::new(Complex64::new(1.0, 0.0), letters_of(i).to_vec());
            rho += s.to_dense() * Complex64::new(c / 8.0, 0.0);
        }
    }
    Ok(TomographyResult { subsystem: sub, coefficients, rho: DensityMatrix::from_matrix(3, rho), records })
}
