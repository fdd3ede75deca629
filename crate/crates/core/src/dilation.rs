//! Imaginary-time evolution through a one-ancilla unitary dilation.
//!
//! For a contraction `uU` the block matrix
//!
//! ```text
//!   U'' = [ uU  I ]
//!         [ C   I ]      with  C = A sqrt(I - u²Σ²) B†,  U = A Σ B†
//! ```
//!
//! has an orthonormal first block column, so the Q factor of its QR
//! decomposition (with a positive real diagonal in R) is a unitary whose
//! top-left block is exactly `uU`. The ancilla is the highest qubit, so the
//! top-left block is the `|0_A>` sector.

use nalgebra::{DMatrix, QR, SVD};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Result, SimError};
use crate::model::{exact_ground_state, HamiltonianOperator};
use crate::qstate::{GateOp, Statevector};

/// How the scale `u` in front of the non-unitary block is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
pub enum ScalePolicy {
    /// `u = 1 / σ_max`, the largest scale that keeps `C` well defined.
    #[default]
    InverseMaxSingular,
    Fixed(f64),
}

#[derive(Debug, Clone)]
pub struct DilatedUnitary {
    pub beta: f64,
    /// Scale factor `u`.
    pub scale: f64,
    /// The full `2N x 2N` unitary.
    pub blocks: DMatrix<Complex64>,
    /// Ancilla position in the dilated register (always the top qubit).
    pub ancilla_index: usize,
    pub n_system: usize,
}

impl DilatedUnitary {
    fn half(&self) -> usize {
        self.blocks.nrows() / 2
    }

    /// Block `(row, col)` with 0 = ancilla `|0>` sector, 1 = ancilla `|1>`.
    pub fn block(&self, row: usize, col: usize) -> DMatrix<Complex64> {
        let n = self.half();
        self.blocks.view((row * n, col * n), (n, n)).into_owned()
    }

    /// `u U(β)`.
    pub fn top_left(&self) -> DMatrix<Complex64> {
        self.block(0, 0)
    }

    /// The dilation as a gate acting on `targets`, the last of which is the ancilla.
    pub fn gate_on(&self, targets: Vec<usize>) -> Result<GateOp> {
        GateOp::unitary(targets, self.blocks.clone())
    }

    /// The dilation on qubits `0..=n_system`, ancilla on top.
    pub fn gate(&self) -> Result<GateOp> {
        self.gate_on((0..=self.n_system).collect())
    }

    /// `Post[U_imag |ψ>|0_A>]` and its success probability.
    pub fn postselected(&self, input: &Statevector) -> Result<(Statevector, f64)> {
        if input.n_qubits() != self.n_system {
            return Err(SimError::DimensionMismatch { expected: self.n_system, got: input.n_qubits() });
        }
        let full = input.tensor(&Statevector::zero(1)).with_gate(&self.gate()?)?;
        full.postselect(self.ancilla_index, 0)
    }
}

/// `e^{-βH}` via the eigendecomposition of `H`.
pub fn propagator(h: &HamiltonianOperator, beta: f64) -> Result<DMatrix<Complex64>> {
    if beta < 0.0 || beta.is_nan() {
        return Err(SimError::NegativeBeta(beta));
    }
    let eig = h.eigen()?;
    Ok(eig.apply_fn(|e| Complex64::new((-beta * e).exp(), 0.0)))
}

/// Embeds a square non-unitary matrix as the top-left block of a unitary.
pub fn dilate(op: &DMatrix<Complex64>, policy: ScalePolicy) -> Result<DilatedUnitary> {
    let n = op.nrows();
    if op.ncols() != n || !n.is_power_of_two() {
        return Err(SimError::DimensionMismatch { expected: n, got: op.ncols() });
    }
    let svd = SVD::new(op.clone(), true, true);
    let a = svd.u.as_ref().expect("left singular vectors");
    let b_adj = svd.v_t.as_ref().expect("right singular vectors");
    let sigma = &svd.singular_values;
    let sigma_max = sigma.iter().copied().fold(0.0, f64::max);
    let scale = match policy {
        ScalePolicy::InverseMaxSingular => {
            if sigma_max <= 0.0 {
                return Err(SimError::SingularDilation);
            }
            1.0 / sigma_max
        }
        ScalePolicy::Fixed(u) => u,
    };
    let peak = (scale * sigma_max).powi(2);
    if peak > 1.0 + 1e-12 {
        return Err(SimError::ScaleViolation(peak));
    }

    // C = A sqrt(I - u²Σ²) B†
    let mut a_scaled = a.clone();
    for (k, s) in sigma.iter().enumerate() {
        let d = (1.0 - (scale * s).powi(2)).max(0.0).sqrt();
        a_scaled.column_mut(k).iter_mut().for_each(|x| *x *= d);
    }
    let c = a_scaled * b_adj;

    let mut stacked = DMatrix::<Complex64>::zeros(2 * n, 2 * n);
    let eye = DMatrix::<Complex64>::identity(n, n);
    stacked.view_mut((0, 0), (n, n)).copy_from(&(op * Complex64::new(scale, 0.0)));
    stacked.view_mut((n, 0), (n, n)).copy_from(&c);
    stacked.view_mut((0, n), (n, n)).copy_from(&eye);
    stacked.view_mut((n, n), (n, n)).copy_from(&eye);

    let qr = QR::new(stacked);
    let mut q = qr.q();
    let r = qr.r();
    for k in 0..2 * n {
        let d = r[(k, k)];
        if d.norm() < 1e-10 {
            return Err(SimError::SingularDilation);
        }
        // Positive real diagonal in R: rescale column k of Q by the phase of R_kk.
        let phase = d / d.norm();
        q.column_mut(k).iter_mut().for_each(|x| *x *= phase);
    }

    let n_system = n.trailing_zeros() as usize;
    Ok(DilatedUnitary { beta: f64::NAN, scale, blocks: q, ancilla_index: n_system, n_system })
}

/// Dilation of `e^{-βH}` with the default scale policy.
///
/// Since `σ_max(e^{-βH}) = e^{-βE₀}`, the scaled block `u e^{-βH}` is built
/// directly as `e^{-β(H-E₀)}`, which stays finite for any `β`.
pub fn dilate_propagator(h: &HamiltonianOperator, beta: f64) -> Result<DilatedUnitary> {
    if beta < 0.0 || beta.is_nan() {
        return Err(SimError::NegativeBeta(beta));
    }
    let eig = h.eigen()?;
    let e0 = eig.values[0];
    let shifted = eig.apply_fn(|e| Complex64::new((-beta * (e - e0)).exp(), 0.0));
    let mut d = dilate(&shifted, ScalePolicy::default())?;
    d.beta = beta;
    d.scale = (beta * e0).exp();
    Ok(d)
}

#[derive(Debug, Clone)]
pub struct QiteOutcome {
    pub state: Statevector,
    pub success_prob: f64,
    pub dilation: DilatedUnitary,
}

/// `Post[U_imag(β)|ψ₀>|0_A>]`, normalized, with the postselection probability.
pub fn qite_prepare(h: &HamiltonianOperator, beta: f64, initial: &Statevector) -> Result<QiteOutcome> {
    let dilation = dilate_propagator(h, beta)?;
    let (state, success_prob) = dilation.postselected(initial)?;
    Ok(QiteOutcome { state, success_prob, dilation })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BetaChoice {
    pub beta: f64,
    pub fidelity: f64,
}

/// Doubling grid searched by [`beta_schedule`]: 1/8, 1/4, ..., 1024.
pub fn beta_grid() -> impl Iterator<Item = f64> {
    (0..=13).map(|k| 0.125 * f64::from(1u32 << k))
}

/// Smallest grid `β` whose QITE output reaches `target_fidelity` (as `|<g|ψ>|`)
/// against the unique exact ground state.
pub fn beta_schedule(
    h: &HamiltonianOperator,
    initial: &Statevector,
    target_fidelity: f64,
) -> Result<BetaChoice> {
    let gs = exact_ground_state(h, 1e-9)?;
    if !gs.is_unique() {
        return Err(SimError::DegenerateGround(gs.degeneracy()));
    }
    let ground = &gs.states[0];
    if ground.inner(initial)?.norm() < 1e-12 {
        return Err(SimError::NoGroundOverlap);
    }
    // Fidelity of the postselected output in the eigenbasis of H, with
    // energies shifted by E0 so that large beta cannot overflow.
    let eig = h.eigen()?;
    let weights: Vec<(f64, f64)> = (0..eig.values.len())
        .map(|k| {
            let v = Statevector::from_amplitudes(h.n_qubits(), eig.column(k))?;
            Ok((eig.values[k] - gs.energy, v.inner(initial)?.norm_sqr()))
        })
        .collect::<Result<_>>()?;
    let ground_weight = ground.inner(initial)?.norm_sqr();
    let mut last = BetaChoice { beta: 0.0, fidelity: 0.0 };
    for beta in beta_grid() {
        let norm: f64 = weights.iter().map(|(e, w)| w * (-2.0 * beta * e).exp()).sum();
        let fidelity = (ground_weight / norm).sqrt().min(1.0);
        last = BetaChoice { beta, fidelity };
        if fidelity >= target_fidelity {
            return Ok(last);
        }
    }
    Err(SimError::BetaScheduleExhausted { reached: last.fidelity, target: target_fidelity, beta: last.beta })
}
