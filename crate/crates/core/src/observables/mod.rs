//! Physical measurements on prepared states: string order, magnetization,
//! quench dynamics, two-copy Rényi entropy, three-qubit tomography and the
//! entanglement spectrum.

mod renyi;
mod spectrum;
mod tomography;

pub use renyi::{qae_renyi, renyi2_swap, QaeCircuit, QaeEstimate, QaeMode, RenyiValue, TwoCopyState};
pub use spectrum::{entanglement_spectrum, EntanglementSpectrum, SPECTRUM_FLOOR};
pub use tomography::{tomography_3q, TomographyMode, TomographyResult};

use nalgebra::DVector;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Result, SimError};
use crate::model::HamiltonianOperator;
use crate::pauli::{Pauli, PauliString};
use crate::qstate::Statevector;

/// `Z₀ Y₁ X₂ ⋯ X_{n−3} Y_{n−2} Z_{n−1}` on an `l`-site chain.
///
/// The factors are multiplied in the written order, so the short windows
/// reduce to `X₀X₁` for `n = 2` and `Z₀Z₂` for `n = 3`.
pub fn string_order_operator(l: usize, n: usize) -> Result<PauliString> {
    if n < 2 || n > l {
        return Err(SimError::InvalidArgument(format!("string window {n} must lie in 2..={l}")));
    }
    let mut sites = vec![(0, Pauli::Z), (1, Pauli::Y)];
    sites.extend((2..n.saturating_sub(2)).map(|k| (k, Pauli::X)));
    sites.push((n - 2, Pauli::Y));
    sites.push((n - 1, Pauli::Z));
    PauliString::from_sites(l, &sites)
}

pub fn string_order(state: &Statevector, n: usize) -> Result<f64> {
    state.expectation(&string_order_operator(state.n_qubits(), n)?)
}

/// `⟨Z_i⟩` for every site.
pub fn magnetization_profile(state: &Statevector) -> Vec<f64> {
    let n = state.n_qubits();
    let mut out = vec![0.0; n];
    for (k, a) in state.amplitudes().iter().enumerate() {
        let p = a.norm_sqr();
        for (q, m) in out.iter_mut().enumerate() {
            *m += if (k >> q) & 1 == 0 { p } else { -p };
        }
    }
    out
}

/// Mean of `⟨Z_i⟩` over the edge sites `{0, L−1}` and over the bulk.
pub fn edge_bulk_average(profile: &[f64]) -> (f64, f64) {
    let l = profile.len();
    let edge = (profile[0] + profile[l - 1]) / 2.0;
    let bulk = if l > 2 { profile[1..l - 1].iter().sum::<f64>() / (l - 2) as f64 } else { 0.0 };
    (edge, bulk)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuenchTrace {
    pub initial: String,
    pub ts: Vec<f64>,
    pub edge: Vec<f64>,
    pub bulk: Vec<f64>,
}

impl QuenchTrace {
    pub fn min_edge(&self) -> f64 {
        self.edge.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_abs_bulk(&self) -> f64 {
        self.bulk.iter().fold(0.0, |m, b| m.max(b.abs()))
    }
}

/// Edge and bulk magnetization of `e^{−itH}|bits⟩` on a sorted time grid.
pub fn quench_edge_bulk(h: &HamiltonianOperator, bits: &str, ts: &[f64]) -> Result<QuenchTrace> {
    if bits.len() != h.n_qubits() {
        return Err(SimError::DimensionMismatch { expected: h.n_qubits(), got: bits.len() });
    }
    if ts.windows(2).any(|w| w[1] < w[0]) {
        return Err(SimError::InvalidArgument("time grid must be sorted".into()));
    }
    let psi0 = Statevector::from_bitstring(bits)?;
    let eig = h.eigen()?;
    let coeffs = eig.vectors.adjoint() * DVector::from_column_slice(psi0.amplitudes());
    let (mut edge, mut bulk) = (Vec::with_capacity(ts.len()), Vec::with_capacity(ts.len()));
    for &t in ts {
        let phased = DVector::from_fn(coeffs.len(), |k, _| coeffs[k] * Complex64::from_polar(1.0, -eig.values[k] * t));
        let amps = (&eig.vectors * phased).iter().copied().collect();
        let (e, b) = edge_bulk_average(&magnetization_profile(&Statevector::from_amplitudes(h.n_qubits(), amps)?));
        edge.push(e);
        bulk.push(b);
    }
    Ok(QuenchTrace { initial: bits.to_string(), ts: ts.to_vec(), edge, bulk })
}
