use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{GateOp, Statevector};
use crate::error::{Result, SimError};
use crate::linalg::HermitianEigen;
use crate::pauli::PauliString;

/// A density matrix. Construction does not enforce positivity: linear-inversion
/// tomography can legitimately produce small negative eigenvalues, and those are
/// reported rather than hidden. Use [`DensityMatrix::validate`] to check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityMatrix {
    n_qubits: usize,
    elements: DMatrix<Complex64>,
}

impl DensityMatrix {
    pub fn from_matrix(n_qubits: usize, elements: DMatrix<Complex64>) -> Self {
        debug_assert_eq!(elements.nrows(), 1 << n_qubits);
        Self { n_qubits, elements }
    }

    pub fn from_pure(state: &Statevector) -> Self {
        let v = nalgebra::DVector::from_column_slice(state.amplitudes());
        Self { n_qubits: state.n_qubits(), elements: &v * v.adjoint() }
    }

    pub fn maximally_mixed(n_qubits: usize) -> Self {
        let dim = 1usize << n_qubits;
        let elements = DMatrix::identity(dim, dim) * Complex64::new(1.0 / dim as f64, 0.0);
        Self { n_qubits, elements }
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.elements
    }

    pub fn into_matrix(self) -> DMatrix<Complex64> {
        self.elements
    }

    pub fn trace(&self) -> Complex64 {
        self.elements.trace()
    }

    /// `Tr(ρ²)`.
    pub fn purity(&self) -> f64 {
        // Tr(ρ ρ) = Σ_ij ρ_ij ρ_ji = Σ |ρ_ij|² for Hermitian ρ.
        let m = &self.elements;
        let mut acc = Complex64::new(0.0, 0.0);
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                acc += m[(i, j)] * m[(j, i)];
            }
        }
        acc.re
    }

    /// Eigenvalues in descending order.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let mut v = HermitianEigen::new(&self.elements).values;
        v.reverse();
        v
    }

    pub fn hermiticity_error(&self) -> f64 {
        crate::linalg::max_abs_diff(&self.elements, &self.elements.adjoint())
    }

    /// Checks Hermiticity, unit trace and positivity, all to `tol`.
    pub fn validate(&self, tol: f64) -> Result<()> {
        if self.hermiticity_error() > tol {
            return Err(SimError::NotHermitian);
        }
        let tr = self.trace();
        if (tr - Complex64::new(1.0, 0.0)).norm() > tol {
            return Err(SimError::TraceDeviation(tr.re));
        }
        let min = self.eigenvalues().last().copied().unwrap_or(0.0);
        if min < -tol {
            return Err(SimError::InvalidArgument(format!("negative eigenvalue {min:.3e}")));
        }
        Ok(())
    }

    /// `Tr(ρ O)`.
    pub fn expectation(&self, obs: &PauliString) -> Result<f64> {
        if obs.n_qubits() != self.n_qubits {
            return Err(SimError::DimensionMismatch { expected: self.n_qubits, got: obs.n_qubits() });
        }
        if !obs.is_hermitian() {
            return Err(SimError::NotHermitian);
        }
        let act = obs.action();
        let mut acc = Complex64::new(0.0, 0.0);
        // Tr(ρ P) = Σ_k <k|ρ P|k> = Σ_k ρ[k, k^x] * phase * sign(k)
        for k in 0..self.elements.nrows() {
            let sign = if (k & act.z_mask).count_ones() % 2 == 1 { -1.0 } else { 1.0 };
            acc += self.elements[(k, k ^ act.x_mask)] * sign;
        }
        Ok((act.phase * acc).re)
    }

    fn map_columns<F>(m: &DMatrix<Complex64>, n_qubits: usize, f: F) -> Result<DMatrix<Complex64>>
    where
        F: Fn(Statevector) -> Result<Statevector>,
    {
        let dim = m.nrows();
        let mut out = DMatrix::zeros(dim, dim);
        for c in 0..dim {
            let col = Statevector::from_amplitudes(n_qubits, m.column(c).iter().copied().collect())?;
            let mapped = f(col)?;
            out.column_mut(c).copy_from_slice(mapped.amplitudes());
        }
        Ok(out)
    }

    /// `G ρ G†`.
    pub fn apply_gate(&mut self, gate: &GateOp) -> Result<()> {
        let n = self.n_qubits;
        let left = Self::map_columns(&self.elements, n, |s| s.with_gate(gate))?;
        let right = Self::map_columns(&left.adjoint(), n, |s| s.with_gate(gate))?;
        self.elements = right.adjoint();
        Ok(())
    }

    /// `P ρ P†`.
    pub fn conjugate_by_pauli(&self, p: &PauliString) -> Result<DMatrix<Complex64>> {
        let n = self.n_qubits;
        let left = Self::map_columns(&self.elements, n, |s| s.apply_pauli(p))?;
        let right = Self::map_columns(&left.adjoint(), n, |s| s.apply_pauli(p))?;
        Ok(right.adjoint())
    }

    pub fn set_matrix(&mut self, elements: DMatrix<Complex64>) {
        self.elements = elements;
    }

    /// `<ψ|ρ|ψ>`.
    pub fn fidelity_with_pure(&self, state: &Statevector) -> Result<f64> {
        if state.n_qubits() != self.n_qubits {
            return Err(SimError::DimensionMismatch { expected: self.n_qubits, got: state.n_qubits() });
        }
        let v = nalgebra::DVector::from_column_slice(state.amplitudes());
        Ok((v.adjoint() * &self.elements * &v)[(0, 0)].re)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pauli::Pauli;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn pure_state_density_is_valid() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let s = Statevector::random(3, &mut rng);
        let rho = DensityMatrix::from_pure(&s);
        rho.validate(1e-10).unwrap();
        assert!((rho.purity() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn expectation_matches_statevector() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let s = Statevector::random(3, &mut rng);
        let rho = DensityMatrix::from_pure(&s);
        let p = PauliString::from_sites(3, &[(0, Pauli::Y), (2, Pauli::X)]).unwrap();
        assert!((rho.expectation(&p).unwrap() - s.expectation(&p).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn gate_conjugation_matches_statevector() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let s = Statevector::random(3, &mut rng);
        let g = GateOp::ecr(2, 1);
        let mut rho = DensityMatrix::from_pure(&s);
        rho.apply_gate(&g).unwrap();
        let expected = DensityMatrix::from_pure(&s.with_gate(&g).unwrap());
        assert!(crate::linalg::max_abs_diff(rho.matrix(), expected.matrix()) < 1e-13);
    }

    #[test]
    fn maximally_mixed_is_fixed_by_unitaries() {
        let mut rho = DensityMatrix::maximally_mixed(2);
        rho.apply_gate(&GateOp::ecr(0, 1)).unwrap();
        assert!(crate::linalg::max_abs_diff(rho.matrix(), DensityMatrix::maximally_mixed(2).matrix()) < 1e-15);
    }
}
