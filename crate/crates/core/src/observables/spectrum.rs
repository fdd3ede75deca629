use serde::{Deserialize, Serialize};

use crate::error::{Result, SimError};
use crate::qstate::DensityMatrix;

/// Eigenvalues below this are clipped before taking `−ln`.
pub const SPECTRUM_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntanglementSpectrum {
    /// Eigenvalues of `ρ_A`, descending, as estimated (may dip below zero).
    pub epsilons: Vec<f64>,
    /// `λᵢ = −ln max(εᵢ, floor)`.
    pub lambdas: Vec<f64>,
    pub floor: f64,
    /// `λ_hi − λ_lo` for `gap_pair = (lo, hi)` (0-based), default `(1, 2)`.
    pub gap: f64,
    pub gap_pair: (usize, usize),
    /// `εᵢ − εᵢ^ref` when a reference spectrum is supplied.
    pub delta_eps: Option<Vec<f64>>,
}

impl EntanglementSpectrum {
    pub fn with_gap_pair(mut self, lo: usize, hi: usize) -> Self {
        self.gap_pair = (lo, hi);
        self.gap = self.lambdas[hi] - self.lambdas[lo];
        self
    }
}

pub fn entanglement_spectrum(
    rho: &DensityMatrix,
    floor: f64,
    reference: Option<&[f64]>,
) -> Result<EntanglementSpectrum> {
    let tr = rho.trace().re;
    if (tr - 1.0).abs() > 1e-3 {
        return Err(SimError::TraceDeviation(tr));
    }
    let epsilons = rho.eigenvalues();
    let lambdas: Vec<f64> = epsilons.iter().map(|e| -e.max(floor).ln()).collect();
    let gap_pair = (1.min(lambdas.len() - 1), 2.min(lambdas.len() - 1));
    let delta_eps = reference.map(|r| epsilons.iter().zip(r).map(|(e, r)| e - r).collect());
    Ok(EntanglementSpectrum {
        gap: lambdas[gap_pair.1] - lambdas[gap_pair.0],
        epsilons,
        lambdas,
        floor,
        gap_pair,
        delta_eps,
    })
}
