//! Thin helpers over nalgebra for the dense oracles.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;

/// Eigendecomposition of a Hermitian matrix, eigenvalues ascending.
#[derive(Debug, Clone)]
pub struct HermitianEigen {
    pub values: Vec<f64>,
    /// Column `k` is the eigenvector of `values[k]`.
    pub vectors: DMatrix<Complex64>,
}

impl HermitianEigen {
    pub fn new(m: &DMatrix<Complex64>) -> Self {
        // Symmetrize first so round-off in the input cannot leak into the solver.
        let herm = (m + m.adjoint()) * Complex64::new(0.5, 0.0);
        let eig = SymmetricEigen::new(herm);
        let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
        let vectors = DMatrix::from_fn(m.nrows(), order.len(), |r, c| eig.eigenvectors[(r, order[c])]);
        Self { values, vectors }
    }

    /// `V f(Λ) V†` for a scalar function of the eigenvalues.
    pub fn apply_fn<F>(&self, f: F) -> DMatrix<Complex64>
    where
        F: Fn(f64) -> Complex64,
    {
        let mut scaled = self.vectors.clone();
        for (c, &lam) in self.values.iter().enumerate() {
            let s = f(lam);
            scaled.column_mut(c).iter_mut().for_each(|x| *x *= s);
        }
        scaled * self.vectors.adjoint()
    }

    pub fn column(&self, k: usize) -> Vec<Complex64> {
        self.vectors.column(k).iter().copied().collect()
    }
}

pub fn max_abs_diff(a: &DMatrix<Complex64>, b: &DMatrix<Complex64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

/// `max |a|` over all entries.
pub fn max_abs(a: &DMatrix<Complex64>) -> f64 {
    a.iter().map(|x| x.norm()).fold(0.0, f64::max)
}

pub fn identity(dim: usize) -> DMatrix<Complex64> {
    DMatrix::identity(dim, dim)
}

/// `a ⊗ b` with `b` on the low-order index bits, matching the register order
/// where `b` acts on the lower qubits.
pub fn kron(high: &DMatrix<Complex64>, low: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    high.kronecker(low)
}

/// Pairwise summation, stable and independent of reduction order up to rounding.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    match xs.len() {
        0 => 0.0,
        n if n <= 8 => xs.iter().sum(),
        n => {
            let (a, b) = xs.split_at(n / 2);
            pairwise_sum(a) + pairwise_sum(b)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eigen_reconstructs_hermitian_matrix() {
        let m = DMatrix::from_row_slice(
            2,
            2,
            &[
                Complex64::new(1.0, 0.0),
                Complex64::new(0.0, -2.0),
                Complex64::new(0.0, 2.0),
                Complex64::new(-1.0, 0.0),
            ],
        );
        let e = HermitianEigen::new(&m);
        assert!(e.values[0] <= e.values[1]);
        let back = e.apply_fn(|x| Complex64::new(x, 0.0));
        assert!(max_abs_diff(&back, &m) < 1e-12);
        assert!((e.values[0] + 5f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn pairwise_sum_matches_naive() {
        let xs: Vec<f64> = (0..1000).map(|i| (i as f64).sin()).collect();
        let naive: f64 = xs.iter().sum();
        assert!((pairwise_sum(&xs) - naive).abs() < 1e-10);
    }

    #[test]
    fn kron_puts_second_factor_on_low_bits() {
        let x = DMatrix::from_row_slice(
            2,
            2,
            &[Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0), Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)],
        );
        let id = identity(2);
        // X on the low qubit maps index 0 -> 1.
        let m = kron(&id, &x);
        assert_eq!(m[(1, 0)], Complex64::new(1.0, 0.0));
    }
}
