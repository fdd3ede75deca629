use std::f64::consts::{FRAC_1_SQRT_2, PI};
use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Result, SimError};

pub type Mat2 = [[Complex64; 2]; 2];
pub type Mat4 = [[Complex64; 4]; 4];

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);
const I: Complex64 = Complex64::new(0.0, 1.0);

/// Generic unitaries are accepted when `max|G†G - I|` is below this.
pub const UNITARY_TOL: f64 = 1e-9;

#[derive(Debug, Clone)]
pub enum GateKind {
    U3 { theta: f64, phi: f64, lambda: f64 },
    Ecr,
    X,
    Swap,
    /// Targets are `[control, a, b]`.
    CSwap,
    Unitary(Arc<DMatrix<Complex64>>),
}

/// A gate bound to qubits. For multi-qubit gates `targets[k]` maps to bit `k`
/// of the gate matrix index, so with targets `[0, 1]` the matrix is written in
/// the same little-endian order as the register.
#[derive(Debug, Clone)]
pub struct GateOp {
    pub kind: GateKind,
    pub targets: Vec<usize>,
}

pub fn u3_matrix(theta: f64, phi: f64, lambda: f64) -> Mat2 {
    let (s, c) = (theta / 2.0).sin_cos();
    let el = Complex64::from_polar(1.0, lambda);
    let ep = Complex64::from_polar(1.0, phi);
    let epl = Complex64::from_polar(1.0, phi + lambda);
    [[ONE * c, -el * s], [ep * s, epl * c]]
}

/// Partial derivatives of the U3 matrix with respect to (theta, phi, lambda).
pub fn u3_derivatives(theta: f64, phi: f64, lambda: f64) -> [Mat2; 3] {
    let (s, c) = (theta / 2.0).sin_cos();
    let el = Complex64::from_polar(1.0, lambda);
    let ep = Complex64::from_polar(1.0, phi);
    let epl = Complex64::from_polar(1.0, phi + lambda);
    let d_theta = [[ONE * (-0.5 * s), -el * (0.5 * c)], [ep * (0.5 * c), epl * (-0.5 * s)]];
    let d_phi = [[ZERO, ZERO], [I * ep * s, I * epl * c]];
    let d_lambda = [[ZERO, -I * el * s], [ZERO, I * epl * c]];
    [d_theta, d_phi, d_lambda]
}

pub fn ecr_matrix() -> Mat4 {
    let r = FRAC_1_SQRT_2;
    let a = ONE * r;
    let b = I * r;
    [
        [ZERO, a, ZERO, b],
        [a, ZERO, -b, ZERO],
        [ZERO, b, ZERO, a],
        [-b, ZERO, a, ZERO],
    ]
}

pub fn adjoint2(m: &Mat2) -> Mat2 {
    [[m[0][0].conj(), m[1][0].conj()], [m[0][1].conj(), m[1][1].conj()]]
}

impl GateOp {
    pub fn u3(q: usize, theta: f64, phi: f64, lambda: f64) -> Self {
        Self { kind: GateKind::U3 { theta, phi, lambda }, targets: vec![q] }
    }

    pub fn hadamard(q: usize) -> Self {
        Self::u3(q, PI / 2.0, 0.0, PI)
    }

    pub fn ecr(a: usize, b: usize) -> Self {
        Self { kind: GateKind::Ecr, targets: vec![a, b] }
    }

    pub fn x(q: usize) -> Self {
        Self { kind: GateKind::X, targets: vec![q] }
    }

    pub fn swap(a: usize, b: usize) -> Self {
        Self { kind: GateKind::Swap, targets: vec![a, b] }
    }

    pub fn cswap(control: usize, a: usize, b: usize) -> Self {
        Self { kind: GateKind::CSwap, targets: vec![control, a, b] }
    }

    /// Wraps an arbitrary matrix after checking its shape and unitarity.
    pub fn unitary(targets: Vec<usize>, matrix: DMatrix<Complex64>) -> Result<Self> {
        let dim = 1usize << targets.len();
        if matrix.nrows() != dim || matrix.ncols() != dim {
            return Err(SimError::DimensionMismatch { expected: dim, got: matrix.nrows() });
        }
        let deviation = unitarity_deviation(&matrix);
        if deviation > UNITARY_TOL {
            return Err(SimError::NotUnitary { deviation });
        }
        Ok(Self { kind: GateKind::Unitary(Arc::new(matrix)), targets })
    }

    pub fn arity(&self) -> usize {
        self.targets.len()
    }

    /// Dense gate matrix in the target-ordered little-endian convention.
    pub fn matrix(&self) -> DMatrix<Complex64> {
        match &self.kind {
            GateKind::U3 { theta, phi, lambda } => {
                let m = u3_matrix(*theta, *phi, *lambda);
                DMatrix::from_fn(2, 2, |r, c| m[r][c])
            }
            GateKind::X => DMatrix::from_fn(2, 2, |r, c| if r != c { ONE } else { ZERO }),
            GateKind::Ecr => {
                let m = ecr_matrix();
                DMatrix::from_fn(4, 4, |r, c| m[r][c])
            }
            GateKind::Swap => DMatrix::from_fn(4, 4, |r, c| {
                let swapped = ((c & 1) << 1) | (c >> 1);
                if r == swapped {
                    ONE
                } else {
                    ZERO
                }
            }),
            GateKind::CSwap => DMatrix::from_fn(8, 8, |r, c| {
                let image = if c & 1 == 1 {
                    let a = (c >> 1) & 1;
                    let b = (c >> 2) & 1;
                    1 | (b << 1) | (a << 2)
                } else {
                    c
                };
                if r == image {
                    ONE
                } else {
                    ZERO
                }
            }),
            GateKind::Unitary(m) => (**m).clone(),
        }
    }

    /// The inverse gate.
    pub fn adjoint(&self) -> GateOp {
        let kind = match &self.kind {
            // U3(θ,φ,λ)† = U3(-θ,-λ,-φ)
            GateKind::U3 { theta, phi, lambda } => {
                GateKind::U3 { theta: -theta, phi: -lambda, lambda: -phi }
            }
            GateKind::Unitary(m) => GateKind::Unitary(Arc::new(m.adjoint())),
            other => other.clone(),
        };
        GateOp { kind, targets: self.targets.clone() }
    }
}

/// `max |G†G - I|` over all entries.
pub fn unitarity_deviation(m: &DMatrix<Complex64>) -> f64 {
    let prod = m.adjoint() * m;
    let mut worst: f64 = 0.0;
    for r in 0..prod.nrows() {
        for c in 0..prod.ncols() {
            let expected = if r == c { ONE } else { ZERO };
            worst = worst.max((prod[(r, c)] - expected).norm());
        }
    }
    worst
}
