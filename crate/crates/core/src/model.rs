//! Open-chain Ising-cluster Hamiltonian
//!
//! `H = -J Σ_{i=0}^{L-2} Z_i Z_{i+1} - h Σ_{i=0}^{L-1} X_i - g Σ_{i=1}^{L-2} Z_{i-1} X_i Z_{i+1}`
//!
//! together with its exact-diagonalization oracle and the spin-flip symmetries.

use std::sync::OnceLock;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Result, SimError};
use crate::linalg::{max_abs, HermitianEigen};
use crate::pauli::{Pauli, PauliString};
use crate::qstate::{GateOp, Statevector};

/// Largest register for which dense matrices are built.
pub const MAX_DENSE_QUBITS: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IsingClusterParams {
    pub j: f64,
    pub h: f64,
    pub g: f64,
    pub l: usize,
}

impl IsingClusterParams {
    pub fn new(j: f64, h: f64, g: f64, l: usize) -> Result<Self> {
        if l < 3 {
            return Err(SimError::ChainTooShort(l));
        }
        Ok(Self { j, h, g, l })
    }

    /// `(J, h, g) / (J + h + g)`, or `None` when the sum is not positive.
    pub fn normalized(&self) -> Option<(f64, f64, f64)> {
        let s = self.j + self.h + self.g;
        (s > 0.0).then(|| (self.j / s, self.h / s, self.g / s))
    }
}

#[derive(Debug, Clone)]
pub struct HamiltonianOperator {
    n_qubits: usize,
    pub terms: Vec<PauliString>,
    dense: OnceLock<DMatrix<Complex64>>,
    eigen: OnceLock<HermitianEigen>,
}

impl HamiltonianOperator {
    /// Builds `Σ terms`. Every term must act on `n_qubits` and be Hermitian.
    pub fn from_terms(n_qubits: usize, terms: Vec<PauliString>) -> Result<Self> {
        for t in &terms {
            if t.n_qubits() != n_qubits {
                return Err(SimError::DimensionMismatch { expected: n_qubits, got: t.n_qubits() });
            }
            if !t.is_hermitian() {
                return Err(SimError::NotHermitian);
            }
        }
        Ok(Self { n_qubits, terms, dense: OnceLock::new(), eigen: OnceLock::new() })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dim(&self) -> usize {
        1 << self.n_qubits
    }

    fn check_dense(&self) -> Result<()> {
        if self.n_qubits > MAX_DENSE_QUBITS {
            return Err(SimError::DimensionTooLarge(self.n_qubits));
        }
        Ok(())
    }

    pub fn dense(&self) -> Result<&DMatrix<Complex64>> {
        self.check_dense()?;
        Ok(self.dense.get_or_init(|| {
            let dim = self.dim();
            let mut m = DMatrix::zeros(dim, dim);
            for t in &self.terms {
                let act = t.action();
                for k in 0..dim {
                    let sign = if (k & act.z_mask).count_ones() % 2 == 1 { -1.0 } else { 1.0 };
                    m[(k ^ act.x_mask, k)] += act.phase * sign;
                }
            }
            m
        }))
    }

    pub fn eigen(&self) -> Result<&HermitianEigen> {
        let dense = self.dense()?;
        Ok(self.eigen.get_or_init(|| HermitianEigen::new(dense)))
    }

    /// `H|ψ>` from the term list, without a dense matrix.
    pub fn apply(&self, state: &Statevector) -> Result<Statevector> {
        let mut out = vec![Complex64::new(0.0, 0.0); state.dim()];
        for t in &self.terms {
            let ps = state.apply_pauli(t)?;
            out.iter_mut().zip(ps.amplitudes()).for_each(|(o, a)| *o += a);
        }
        Statevector::from_amplitudes(state.n_qubits(), out)
    }

    /// `<ψ|H|ψ>`.
    pub fn energy(&self, state: &Statevector) -> Result<f64> {
        self.terms.iter().map(|t| state.expectation(t)).sum()
    }
}

pub fn build_hamiltonian(p: &IsingClusterParams) -> Result<HamiltonianOperator> {
    let l = p.l;
    if l < 3 {
        return Err(SimError::ChainTooShort(l));
    }
    let c = |x: f64| Complex64::new(x, 0.0);
    let mut terms = Vec::with_capacity(3 * l);
    for i in 0..l - 1 {
        terms.push(PauliString::from_sites(l, &[(i, Pauli::Z), (i + 1, Pauli::Z)])?.scaled(c(-p.j)));
    }
    for i in 0..l {
        terms.push(PauliString::single(l, i, Pauli::X)?.scaled(c(-p.h)));
    }
    for i in 1..l - 1 {
        terms.push(
            PauliString::from_sites(l, &[(i - 1, Pauli::Z), (i, Pauli::X), (i + 1, Pauli::Z)])?
                .scaled(c(-p.g)),
        );
    }
    HamiltonianOperator::from_terms(l, terms)
}

/// Lowest eigenvalue and an orthonormal basis of every eigenvector within the
/// degeneracy tolerance of it.
#[derive(Debug, Clone)]
pub struct GroundSpace {
    pub energy: f64,
    pub states: Vec<Statevector>,
}

impl GroundSpace {
    pub fn degeneracy(&self) -> usize {
        self.states.len()
    }

    pub fn is_unique(&self) -> bool {
        self.states.len() == 1
    }

    /// Largest `|<φ|ψ>|²` summed over the basis, i.e. weight of `ψ` in the space.
    pub fn weight_of(&self, psi: &Statevector) -> Result<f64> {
        self.states.iter().map(|s| Ok(s.inner(psi)?.norm_sqr())).sum()
    }

    /// The state in this space that maximizes `<φ|obs|φ>`.
    ///
    /// Degenerate spaces have no preferred basis, so consumers that need a
    /// single representative (for example a symmetry-broken edge state) pick
    /// it through an observable rather than through eigensolver ordering.
    pub fn maximizing(&self, obs: &PauliString) -> Result<Statevector> {
        let k = self.states.len();
        let images = self.states.iter().map(|s| s.apply_pauli(obs)).collect::<Result<Vec<_>>>()?;
        let mut proj = DMatrix::<Complex64>::zeros(k, k);
        for a in 0..k {
            for b in 0..k {
                proj[(a, b)] = self.states[a].inner(&images[b])?;
            }
        }
        let eig = HermitianEigen::new(&proj);
        let top = eig.column(k - 1);
        let mut amps = vec![Complex64::new(0.0, 0.0); self.states[0].dim()];
        for (coef, s) in top.iter().zip(&self.states) {
            amps.iter_mut().zip(s.amplitudes()).for_each(|(o, a)| *o += coef * a);
        }
        let mut out = Statevector::from_amplitudes(self.states[0].n_qubits(), amps)?;
        out.normalize();
        Ok(out)
    }
}

pub fn exact_ground_state(h: &HamiltonianOperator, degeneracy_tol: f64) -> Result<GroundSpace> {
    let eig = h.eigen()?;
    let e0 = eig.values[0];
    let states = eig
        .values
        .iter()
        .enumerate()
        .take_while(|(_, &e)| e - e0 <= degeneracy_tol)
        .map(|(k, _)| Statevector::from_amplitudes(h.n_qubits(), eig.column(k)))
        .collect::<Result<Vec<_>>>()?;
    Ok(GroundSpace { energy: e0, states })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SymmetryOperators {
    pub p_odd: PauliString,
    pub p_even: PauliString,
    pub p: PauliString,
}

/// Spin flips on odd sites, even sites, and all sites (0-based site parity).
pub fn symmetry_operators(l: usize) -> SymmetryOperators {
    let flips = |keep: &dyn Fn(usize) -> bool| {
        let letters = (0..l).map(|i| if keep(i) { Pauli::X } else { Pauli::I }).collect();
        PauliString::new(Complex64::new(1.0, 0.0), letters)
    };
    let p_odd = flips(&|i| i % 2 == 1);
    let p_even = flips(&|i| i % 2 == 0);
    let p = &p_odd * &p_even;
    SymmetryOperators { p_odd, p_even, p }
}

/// `e^{-itH}` as a gate on every qubit of the chain.
pub fn quench_propagator(h: &HamiltonianOperator, t: f64) -> Result<GateOp> {
    let u = h.eigen()?.apply_fn(|e| Complex64::from_polar(1.0, -e * t));
    GateOp::unitary((0..h.n_qubits()).collect(), u)
}

/// `max |[A, B]|` over the dense matrices.
pub fn commutator_norm(a: &DMatrix<Complex64>, b: &DMatrix<Complex64>) -> f64 {
    max_abs(&(a * b - b * a))
}

/// `½(|0000> + |0100> + |0010> - |0110>)`, the closed-form four-site cluster
/// ground state with both edge spins in `|0>`.
pub fn cluster_state_l4() -> Statevector {
    let mut amps = vec![Complex64::new(0.0, 0.0); 16];
    for (bits, sign) in [("0000", 1.0), ("0100", 1.0), ("0010", 1.0), ("0110", -1.0)] {
        let k = crate::qstate::bitstring_to_index(bits).unwrap();
        amps[k] = Complex64::new(0.5 * sign, 0.0);
    }
    Statevector::from_amplitudes(4, amps).unwrap()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::max_abs_diff;

    fn ham(j: f64, h: f64, g: f64, l: usize) -> HamiltonianOperator {
        build_hamiltonian(&IsingClusterParams::new(j, h, g, l).unwrap()).unwrap()
    }

    #[test]
    fn short_chain_is_rejected() {
        assert_eq!(IsingClusterParams::new(1.0, 1.0, 1.0, 2).unwrap_err(), SimError::ChainTooShort(2));
        let p = IsingClusterParams { j: 1.0, h: 0.0, g: 0.0, l: 2 };
        assert!(build_hamiltonian(&p).is_err());
    }

    #[test]
    fn term_counts_follow_open_boundaries() {
        let h = ham(1.0, 1.0, 1.0, 6);
        assert_eq!(h.terms.len(), 5 + 6 + 4);
    }

    #[test]
    fn normalized_coordinates_sum_to_one() {
        let p = IsingClusterParams::new(1.0, 1.0, 2.5, 8).unwrap();
        let (a, b, c) = p.normalized().unwrap();
        assert!((a + b + c - 1.0).abs() < 1e-15);
        assert!(IsingClusterParams::new(0.0, 0.0, 0.0, 4).unwrap().normalized().is_none());
    }

    #[test]
    fn classical_ising_limit() {
        let gs = exact_ground_state(&ham(1.0, 0.0, 0.0, 4), 1e-9).unwrap();
        assert!((gs.energy + 3.0).abs() < 1e-12);
        assert_eq!(gs.degeneracy(), 2);
        let all0 = Statevector::from_bitstring("0000").unwrap();
        let all1 = Statevector::from_bitstring("1111").unwrap();
        assert!((gs.weight_of(&all0).unwrap() - 1.0).abs() < 1e-10);
        assert!((gs.weight_of(&all1).unwrap() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn decoupled_field_limit() {
        let gs = exact_ground_state(&ham(0.0, 1.0, 0.0, 4), 1e-9).unwrap();
        assert!((gs.energy + 4.0).abs() < 1e-12);
        assert!(gs.is_unique());
        let f = gs.states[0].inner(&Statevector::plus(4)).unwrap().norm();
        assert!((f - 1.0).abs() < 1e-10);
    }

    #[test]
    fn cluster_limit_contains_closed_form_state() {
        let gs = exact_ground_state(&ham(0.0, 0.0, 1.0, 4), 1e-9).unwrap();
        assert!((gs.energy + 2.0).abs() < 1e-12);
        // Two free edge spins: four-fold degenerate.
        assert_eq!(gs.degeneracy(), 4);
        let w = gs.weight_of(&cluster_state_l4()).unwrap();
        assert!(w > 1.0 - 1e-10, "weight {w}");
    }

    #[test]
    fn hamiltonian_is_hermitian() {
        let h = ham(0.7, 1.3, 2.1, 5);
        let d = h.dense().unwrap();
        assert!(max_abs_diff(d, &d.adjoint()) < 1e-12);
    }

    #[test]
    fn term_apply_matches_dense() {
        let h = ham(1.0, 0.5, 2.0, 4);
        let psi = Statevector::plus(4).with_gate(&GateOp::u3(2, 0.3, 0.1, 0.2)).unwrap();
        let fast = h.apply(&psi).unwrap();
        let v = nalgebra::DVector::from_column_slice(psi.amplitudes());
        let slow = h.dense().unwrap() * v;
        let diff = fast.amplitudes().iter().zip(slow.iter()).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        assert!(diff < 1e-12);
    }

    #[test]
    fn symmetry_commutators() {
        let sym = symmetry_operators(5);
        let cluster = ham(0.0, 0.0, 1.0, 5);
        let hc = cluster.dense().unwrap();
        assert!(commutator_norm(&sym.p_odd.to_dense(), hc) < 1e-10);
        assert!(commutator_norm(&sym.p_even.to_dense(), hc) < 1e-10);
        for (j, h, g) in [(1.0, 1.0, 2.5), (0.3, 2.0, 0.1), (1.0, 0.0, 0.0)] {
            let full = ham(j, h, g, 5);
            assert!(commutator_norm(&sym.p.to_dense(), full.dense().unwrap()) < 1e-10);
        }
        // Ising bonds break the sublattice flips.
        let ising = ham(1.0, 0.0, 0.0, 5);
        assert!(commutator_norm(&sym.p_odd.to_dense(), ising.dense().unwrap()) > 1.0);
    }

    #[test]
    fn sublattice_flips_multiply_to_global_flip() {
        let sym = symmetry_operators(6);
        assert_eq!(sym.p.coefficient, Complex64::new(1.0, 0.0));
        assert!(sym.p.letters.iter().all(|&p| p == Pauli::X));
    }

    #[test]
    fn global_flip_maps_each_term_to_itself() {
        let sym = symmetry_operators(6);
        let h = ham(1.0, 1.0, 2.5, 6);
        for t in &h.terms {
            let conj = &(&sym.p * t) * &sym.p;
            assert_eq!(&conj, t);
        }
    }

    #[test]
    fn quench_propagator_basics() {
        let h = ham(1.0, 1.0, 2.5, 4);
        let u0 = quench_propagator(&h, 0.0).unwrap().matrix();
        assert!(max_abs_diff(&u0, &DMatrix::identity(16, 16)) < 1e-12);
        let t = 0.83;
        let fwd = quench_propagator(&h, t).unwrap().matrix();
        let back = quench_propagator(&h, -t).unwrap().matrix();
        assert!(max_abs_diff(&(fwd * back), &DMatrix::identity(16, 16)) < 1e-10);
    }

    #[test]
    fn quench_conserves_energy() {
        let h = ham(1.0, 1.0, 2.5, 6);
        let psi0 = Statevector::from_bitstring("011110").unwrap();
        let e0 = h.energy(&psi0).unwrap();
        for t in [0.1, 0.7, 2.3, 5.0] {
            let psi = psi0.clone().with_gate(&quench_propagator(&h, t).unwrap()).unwrap();
            assert!((h.energy(&psi).unwrap() - e0).abs() < 1e-9);
        }
    }

    #[test]
    fn maximizing_representative_breaks_the_symmetry() {
        // Ferromagnet: ground space span{|0000>, |1111>}; maximize Z_0.
        let gs = exact_ground_state(&ham(1.0, 0.0, 0.0, 4), 1e-9).unwrap();
        let z0 = PauliString::single(4, 0, Pauli::Z).unwrap();
        let rep = gs.maximizing(&z0).unwrap();
        assert!((rep.expectation(&z0).unwrap() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn oversized_dense_request_fails() {
        let h = HamiltonianOperator::from_terms(13, vec![PauliString::identity(13)]).unwrap();
        assert_eq!(h.dense().unwrap_err(), SimError::DimensionTooLarge(13));
    }
}
