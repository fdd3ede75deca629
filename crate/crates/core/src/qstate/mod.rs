//! Dense statevector and density-matrix simulation.
//!
//! Qubit 0 is the least-significant bit of a basis index. Bitstrings are
//! written qubit 0 first, so `"01"` on two qubits is basis index 2.

mod density;
mod gates;
mod sampling;

pub use density::DensityMatrix;
pub use gates::{
    adjoint2, ecr_matrix, u3_derivatives, u3_matrix, unitarity_deviation, GateKind, GateOp, Mat2,
    Mat4, UNITARY_TOL,
};
pub use sampling::{basis_rotations, sample, sample_ensemble, sample_in_basis, MeasurementRecord};

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Result, SimError};
use crate::pauli::PauliString;

/// Largest register the dense simulator accepts.
pub const MAX_QUBITS: usize = 24;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Statevector {
    n_qubits: usize,
    amps: Vec<Complex64>,
}

pub fn bitstring_to_index(bits: &str) -> Result<usize> {
    bits.chars().enumerate().try_fold(0usize, |acc, (k, c)| match c {
        '0' => Ok(acc),
        '1' => Ok(acc | (1 << k)),
        _ => Err(SimError::InvalidArgument(format!("bad bit {c:?} in {bits:?}"))),
    })
}

pub fn index_to_bitstring(index: usize, n_qubits: usize) -> String {
    (0..n_qubits).map(|k| if (index >> k) & 1 == 1 { '1' } else { '0' }).collect()
}

impl Statevector {
    /// `|0...0>` on `n` qubits.
    pub fn zero(n_qubits: usize) -> Self {
        Self::basis(n_qubits, 0)
    }

    pub fn basis(n_qubits: usize, index: usize) -> Self {
        assert!(n_qubits <= MAX_QUBITS, "register too large");
        let mut amps = vec![ZERO; 1 << n_qubits];
        amps[index] = Complex64::new(1.0, 0.0);
        Self { n_qubits, amps }
    }

    pub fn from_bitstring(bits: &str) -> Result<Self> {
        let index = bitstring_to_index(bits)?;
        Ok(Self::basis(bits.len(), index))
    }

    /// `|+>^{⊗n}`.
    pub fn plus(n_qubits: usize) -> Self {
        let dim = 1usize << n_qubits;
        let a = Complex64::new(1.0 / (dim as f64).sqrt(), 0.0);
        Self { n_qubits, amps: vec![a; dim] }
    }

    pub fn from_amplitudes(n_qubits: usize, amps: Vec<Complex64>) -> Result<Self> {
        let dim = 1usize << n_qubits;
        if amps.len() != dim {
            return Err(SimError::DimensionMismatch { expected: dim, got: amps.len() });
        }
        Ok(Self { n_qubits, amps })
    }

    /// Haar-ish random state from complex Gaussian amplitudes.
    pub fn random<R: Rng + ?Sized>(n_qubits: usize, rng: &mut R) -> Self {
        let dim = 1usize << n_qubits;
        let amps = (0..dim)
            .map(|_| {
                // Box-Muller
                let u1: f64 = rng.gen_range(f64::EPSILON..1.0);
                let u2: f64 = rng.gen();
                let r = (-2.0 * u1.ln()).sqrt();
                Complex64::from_polar(r, 2.0 * std::f64::consts::PI * u2)
            })
            .collect();
        let mut s = Self { n_qubits, amps };
        s.normalize();
        s
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn amplitudes_mut(&mut self) -> &mut [Complex64] {
        &mut self.amps
    }

    pub fn into_amplitudes(self) -> Vec<Complex64> {
        self.amps
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn normalize(&mut self) {
        let n = self.norm_sqr().sqrt();
        if n > 0.0 {
            let inv = 1.0 / n;
            self.amps.iter_mut().for_each(|a| *a *= inv);
        }
    }

    /// `<self|other>`.
    pub fn inner(&self, other: &Statevector) -> Result<Complex64> {
        self.check_dim(other)?;
        Ok(self.amps.iter().zip(&other.amps).map(|(a, b)| a.conj() * b).sum())
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.amps.iter().map(|a| a.norm_sqr()).collect()
    }

    /// `self ⊗ other`, with `other`'s qubits appended above `self`'s.
    pub fn tensor(&self, other: &Statevector) -> Statevector {
        let mut amps = Vec::with_capacity(self.dim() * other.dim());
        for b in &other.amps {
            for a in &self.amps {
                amps.push(a * b);
            }
        }
        Statevector { n_qubits: self.n_qubits + other.n_qubits, amps }
    }

    fn check_dim(&self, other: &Statevector) -> Result<()> {
        if self.dim() != other.dim() {
            return Err(SimError::DimensionMismatch { expected: self.dim(), got: other.dim() });
        }
        Ok(())
    }

    fn check_targets(&self, targets: &[usize]) -> Result<()> {
        for (i, &t) in targets.iter().enumerate() {
            if t >= self.n_qubits {
                return Err(SimError::QubitOutOfRange { index: t, n_qubits: self.n_qubits });
            }
            if targets[..i].contains(&t) {
                return Err(SimError::DuplicateTargets(targets.to_vec()));
            }
        }
        Ok(())
    }

    /// Applies `gate` in place.
    pub fn apply(&mut self, gate: &GateOp) -> Result<()> {
        self.check_targets(&gate.targets)?;
        let t = &gate.targets;
        match &gate.kind {
            GateKind::U3 { theta, phi, lambda } => {
                self.apply_1q(t[0], &u3_matrix(*theta, *phi, *lambda))
            }
            GateKind::X => self.apply_x(t[0]),
            GateKind::Ecr => self.apply_2q(t[0], t[1], &ecr_matrix()),
            GateKind::Swap => self.apply_swap(t[0], t[1]),
            GateKind::CSwap => self.apply_cswap(t[0], t[1], t[2]),
            GateKind::Unitary(m) => self.apply_dense(t, m),
        }
        Ok(())
    }

    /// Consuming variant of [`Statevector::apply`].
    pub fn with_gate(mut self, gate: &GateOp) -> Result<Self> {
        self.apply(gate)?;
        Ok(self)
    }

    pub fn apply_all<'a, I>(&mut self, gates: I) -> Result<()>
    where
        I: IntoIterator<Item = &'a GateOp>,
    {
        for g in gates {
            self.apply(g)?;
        }
        Ok(())
    }

    /// Single-qubit kernel. Caller guarantees `q < n_qubits`.
    pub fn apply_1q(&mut self, q: usize, m: &Mat2) {
        let stride = 1usize << q;
        let dim = self.amps.len();
        let mut base = 0;
        while base < dim {
            for i in base..base + stride {
                let a0 = self.amps[i];
                let a1 = self.amps[i + stride];
                self.amps[i] = m[0][0] * a0 + m[0][1] * a1;
                self.amps[i + stride] = m[1][0] * a0 + m[1][1] * a1;
            }
            base += stride << 1;
        }
    }

    /// Two-qubit kernel; `q0` is bit 0 of the matrix index.
    pub fn apply_2q(&mut self, q0: usize, q1: usize, m: &Mat4) {
        let b0 = 1usize << q0;
        let b1 = 1usize << q1;
        let dim = self.amps.len();
        for i in 0..dim {
            if i & (b0 | b1) != 0 {
                continue;
            }
            let idx = [i, i | b0, i | b1, i | b0 | b1];
            let v = [self.amps[idx[0]], self.amps[idx[1]], self.amps[idx[2]], self.amps[idx[3]]];
            for r in 0..4 {
                self.amps[idx[r]] =
                    m[r][0] * v[0] + m[r][1] * v[1] + m[r][2] * v[2] + m[r][3] * v[3];
            }
        }
    }

    fn apply_x(&mut self, q: usize) {
        let b = 1usize << q;
        for i in 0..self.amps.len() {
            if i & b == 0 {
                self.amps.swap(i, i | b);
            }
        }
    }

    fn apply_swap(&mut self, a: usize, b: usize) {
        let ba = 1usize << a;
        let bb = 1usize << b;
        for i in 0..self.amps.len() {
            if i & ba != 0 && i & bb == 0 {
                self.amps.swap(i, (i & !ba) | bb);
            }
        }
    }

    fn apply_cswap(&mut self, c: usize, a: usize, b: usize) {
        let bc = 1usize << c;
        let ba = 1usize << a;
        let bb = 1usize << b;
        for i in 0..self.amps.len() {
            if i & bc != 0 && i & ba != 0 && i & bb == 0 {
                self.amps.swap(i, (i & !ba) | bb);
            }
        }
    }

    /// Gather/scatter kernel for an arbitrary k-qubit matrix.
    fn apply_dense(&mut self, targets: &[usize], m: &DMatrix<Complex64>) {
        let k = targets.len();
        let sub = 1usize << k;
        let masks: Vec<usize> = targets.iter().map(|&t| 1usize << t).collect();
        let all: usize = masks.iter().sum();
        let offsets: Vec<usize> = (0..sub)
            .map(|local| {
                masks
                    .iter()
                    .enumerate()
                    .filter(|(bit, _)| (local >> bit) & 1 == 1)
                    .map(|(_, m)| m)
                    .sum()
            })
            .collect();
        let mut gathered = vec![ZERO; sub];
        for base in 0..self.amps.len() {
            if base & all != 0 {
                continue;
            }
            for (g, off) in gathered.iter_mut().zip(&offsets) {
                *g = self.amps[base + off];
            }
            for (r, off) in offsets.iter().enumerate() {
                let mut acc = ZERO;
                for (c, g) in gathered.iter().enumerate() {
                    acc += m[(r, c)] * g;
                }
                self.amps[base + off] = acc;
            }
        }
    }

    /// `P|ψ>` for a Pauli string on the same register.
    pub fn apply_pauli(&self, p: &PauliString) -> Result<Statevector> {
        if p.n_qubits() != self.n_qubits {
            return Err(SimError::DimensionMismatch { expected: self.n_qubits, got: p.n_qubits() });
        }
        let act = p.action();
        let mut out = vec![ZERO; self.dim()];
        for (k, a) in self.amps.iter().enumerate() {
            let sign = if (k & act.z_mask).count_ones() % 2 == 1 { -1.0 } else { 1.0 };
            out[k ^ act.x_mask] = act.phase * sign * a;
        }
        Ok(Statevector { n_qubits: self.n_qubits, amps: out })
    }

    /// `<ψ|O|ψ>` for a Hermitian Pauli string.
    pub fn expectation(&self, obs: &PauliString) -> Result<f64> {
        if obs.n_qubits() != self.n_qubits {
            return Err(SimError::DimensionMismatch { expected: self.n_qubits, got: obs.n_qubits() });
        }
        if !obs.is_hermitian() {
            return Err(SimError::NotHermitian);
        }
        let act = obs.action();
        let mut acc = ZERO;
        for (k, a) in self.amps.iter().enumerate() {
            let sign = if (k & act.z_mask).count_ones() % 2 == 1 { -1.0 } else { 1.0 };
            acc += self.amps[k ^ act.x_mask].conj() * a * sign;
        }
        Ok((act.phase * acc).re)
    }

    /// `Tr_B |ψ><ψ|`. Output qubit `j` is input qubit `keep[j]`.
    pub fn reduced_density(&self, keep: &[usize]) -> Result<DensityMatrix> {
        if keep.is_empty() {
            return Err(SimError::EmptySubsystem);
        }
        self.check_targets(keep)?;
        let k = keep.len();
        let dim_a = 1usize << k;
        let keep_mask: usize = keep.iter().map(|&q| 1usize << q).sum();
        let rest: Vec<usize> = (0..self.n_qubits).filter(|q| keep_mask & (1 << q) == 0).collect();
        let embed_a: Vec<usize> = (0..dim_a)
            .map(|a| (0..k).filter(|&j| (a >> j) & 1 == 1).map(|j| 1usize << keep[j]).sum())
            .collect();
        let mut rho = DMatrix::<Complex64>::zeros(dim_a, dim_a);
        for r in 0..(1usize << rest.len()) {
            let base: usize =
                (0..rest.len()).filter(|&j| (r >> j) & 1 == 1).map(|j| 1usize << rest[j]).sum();
            for a in 0..dim_a {
                let amp_a = self.amps[base | embed_a[a]];
                if amp_a == ZERO {
                    continue;
                }
                for b in 0..dim_a {
                    rho[(a, b)] += amp_a * self.amps[base | embed_a[b]].conj();
                }
            }
        }
        Ok(DensityMatrix::from_matrix(k, rho))
    }

    /// Projects `qubit` onto `outcome`, renormalizes, and returns the branch probability.
    pub fn postselect(&self, qubit: usize, outcome: u8) -> Result<(Statevector, f64)> {
        self.check_targets(&[qubit])?;
        let b = 1usize << qubit;
        let want = if outcome == 0 { 0 } else { b };
        let p: f64 = self
            .amps
            .iter()
            .enumerate()
            .filter(|(i, _)| i & b == want)
            .map(|(_, a)| a.norm_sqr())
            .sum();
        if p <= 1e-300 {
            return Err(SimError::ZeroProbabilityBranch { qubit, outcome });
        }
        let inv = 1.0 / p.sqrt();
        // Drop the measured qubit from the register.
        let low = b - 1;
        let amps = (0..self.dim() / 2)
            .map(|j| {
                let i = ((j & !low) << 1) | (j & low) | want;
                self.amps[i] * inv
            })
            .collect();
        Ok((Statevector { n_qubits: self.n_qubits - 1, amps }, p))
    }

    /// Same as [`Statevector::postselect`] but keeps the measured qubit in place.
    pub fn project(&self, qubit: usize, outcome: u8) -> Result<(Statevector, f64)> {
        self.check_targets(&[qubit])?;
        let b = 1usize << qubit;
        let want = if outcome == 0 { 0 } else { b };
        let mut out = self.clone();
        let mut p = 0.0;
        for (i, a) in out.amps.iter_mut().enumerate() {
            if i & b == want {
                p += a.norm_sqr();
            } else {
                *a = ZERO;
            }
        }
        if p <= 1e-300 {
            return Err(SimError::ZeroProbabilityBranch { qubit, outcome });
        }
        out.normalize();
        Ok((out, p))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pauli::Pauli;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::FRAC_1_SQRT_2;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn bell() -> Statevector {
        let r = FRAC_1_SQRT_2;
        Statevector::from_amplitudes(2, vec![c(r, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(r, 0.0)])
            .unwrap()
    }

    #[test]
    fn x_flips_zero_to_one() {
        let s = Statevector::zero(1).with_gate(&GateOp::x(0)).unwrap();
        assert_eq!(s, Statevector::basis(1, 1));
    }

    #[test]
    fn ecr_on_zero_zero() {
        let s = Statevector::zero(2).with_gate(&GateOp::ecr(0, 1)).unwrap();
        let a = s.amplitudes();
        let r = FRAC_1_SQRT_2;
        assert!((a[1] - c(r, 0.0)).norm() < 1e-15);
        assert!((a[3] - c(0.0, -r)).norm() < 1e-15);
        assert!(a[0].norm() < 1e-15 && a[2].norm() < 1e-15);
    }

    #[test]
    fn u3_zero_is_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let s = Statevector::random(3, &mut rng);
        let t = s.clone().with_gate(&GateOp::u3(1, 0.0, 0.0, 0.0)).unwrap();
        assert_eq!(s, t);
    }

    #[test]
    fn kernels_agree_with_dense_path() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let s = Statevector::random(4, &mut rng);
        for g in [
            GateOp::ecr(2, 0),
            GateOp::u3(3, 0.4, 0.2, -0.8),
            GateOp::x(1),
            GateOp::swap(3, 1),
            GateOp::cswap(2, 0, 3),
        ] {
            let fast = s.clone().with_gate(&g).unwrap();
            let generic = GateOp::unitary(g.targets.clone(), g.matrix()).unwrap();
            let slow = s.clone().with_gate(&generic).unwrap();
            let diff: f64 = fast
                .amplitudes()
                .iter()
                .zip(slow.amplitudes())
                .map(|(a, b)| (a - b).norm())
                .fold(0.0, f64::max);
            assert!(diff < 1e-13, "{:?}", g.kind);
        }
    }

    #[test]
    fn bad_targets_are_rejected() {
        let mut s = Statevector::zero(2);
        assert!(matches!(s.apply(&GateOp::x(2)), Err(SimError::QubitOutOfRange { .. })));
        assert!(matches!(s.apply(&GateOp::ecr(1, 1)), Err(SimError::DuplicateTargets(_))));
    }

    #[test]
    fn expectation_examples() {
        let z = PauliString::single(1, 0, Pauli::Z).unwrap();
        assert_eq!(Statevector::zero(1).expectation(&z).unwrap(), 1.0);
        assert!(Statevector::plus(1).expectation(&z).unwrap().abs() < 1e-15);
        let zz: PauliString = "ZZ".parse().unwrap();
        assert!((bell().expectation(&zz).unwrap() - 1.0).abs() < 1e-15);
        let non_herm = zz.scaled(c(0.0, 1.0));
        assert_eq!(bell().expectation(&non_herm), Err(SimError::NotHermitian));
    }

    #[test]
    fn reduced_density_examples() {
        let rho = bell().reduced_density(&[0]).unwrap();
        let half = DMatrix::<Complex64>::identity(2, 2) * c(0.5, 0.0);
        assert!((rho.matrix() - half).norm() < 1e-15);

        // "01": qubit 0 is |0>, qubit 1 is |1>.
        let s = Statevector::from_bitstring("01").unwrap();
        let r0 = s.reduced_density(&[0]).unwrap();
        assert!((r0.matrix()[(0, 0)] - c(1.0, 0.0)).norm() < 1e-15);
        let r1 = s.reduced_density(&[1]).unwrap();
        assert!((r1.matrix()[(1, 1)] - c(1.0, 0.0)).norm() < 1e-15);

        assert_eq!(bell().reduced_density(&[]).unwrap_err(), SimError::EmptySubsystem);
    }

    #[test]
    fn postselect_examples() {
        let (s, p) = bell().postselect(1, 0).unwrap();
        assert!((p - 0.5).abs() < 1e-15);
        assert_eq!(s, Statevector::zero(1));
        let one = Statevector::basis(1, 1);
        assert!(matches!(one.postselect(0, 0), Err(SimError::ZeroProbabilityBranch { .. })));
    }

    #[test]
    fn postselect_removes_middle_qubit() {
        // |q0 q1 q2> = |1 0 1> plus |0 1 1>; keep q1 = 0.
        let mut amps = vec![c(0.0, 0.0); 8];
        amps[0b101] = c(0.6, 0.0);
        amps[0b110] = c(0.8, 0.0);
        let s = Statevector::from_amplitudes(3, amps).unwrap();
        let (out, p) = s.postselect(1, 0).unwrap();
        assert!((p - 0.36).abs() < 1e-15);
        assert_eq!(out, Statevector::from_bitstring("11").unwrap());
    }

    #[test]
    fn bitstring_convention() {
        assert_eq!(bitstring_to_index("01").unwrap(), 2);
        assert_eq!(index_to_bitstring(2, 3), "010");
        assert!(bitstring_to_index("0a").is_err());
    }

    #[test]
    fn tensor_appends_high_qubits() {
        let a = Statevector::from_bitstring("1").unwrap();
        let b = Statevector::from_bitstring("0").unwrap();
        assert_eq!(a.tensor(&b), Statevector::from_bitstring("10").unwrap());
    }
}
