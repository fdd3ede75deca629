//! Signed Pauli strings with exact phase tracking.
//!
//! Letters are stored per site, site 0 first. The textual form writes
//! site 0 leftmost, matching the bitstring convention used everywhere else.

use std::fmt;
use std::ops::Mul;
use std::str::FromStr;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Result, SimError};

const I_UNIT: Complex64 = Complex64::new(0.0, 1.0);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl Pauli {
    /// Single-site product `self * rhs` as (phase, letter).
    pub fn mul(self, rhs: Pauli) -> (Complex64, Pauli) {
        use Pauli::*;
        let one = Complex64::new(1.0, 0.0);
        match (self, rhs) {
            (I, p) | (p, I) => (one, p),
            (a, b) if a == b => (one, I),
            (X, Y) => (I_UNIT, Z),
            (Y, X) => (-I_UNIT, Z),
            (Y, Z) => (I_UNIT, X),
            (Z, Y) => (-I_UNIT, X),
            (Z, X) => (I_UNIT, Y),
            (X, Z) => (-I_UNIT, Y),
            _ => unreachable!(),
        }
    }

    pub fn matrix(self) -> [[Complex64; 2]; 2] {
        let o = Complex64::new(0.0, 0.0);
        let l = Complex64::new(1.0, 0.0);
        match self {
            Pauli::I => [[l, o], [o, l]],
            Pauli::X => [[o, l], [l, o]],
            Pauli::Y => [[o, -I_UNIT], [I_UNIT, o]],
            Pauli::Z => [[l, o], [o, -l]],
        }
    }

    pub fn as_char(self) -> char {
        match self {
            Pauli::I => 'I',
            Pauli::X => 'X',
            Pauli::Y => 'Y',
            Pauli::Z => 'Z',
        }
    }

    pub fn from_char(c: char) -> Option<Pauli> {
        match c.to_ascii_uppercase() {
            'I' => Some(Pauli::I),
            'X' => Some(Pauli::X),
            'Y' => Some(Pauli::Y),
            'Z' => Some(Pauli::Z),
            _ => None,
        }
    }
}

/// `coefficient * letters[0] ⊗ letters[1] ⊗ ...` with site `k` acting on qubit `k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PauliString {
    pub coefficient: Complex64,
    pub letters: Vec<Pauli>,
}

/// Bit-mask form of a Pauli string: `P|k> = phase * (-1)^{popcount(k & z_mask)} |k ^ x_mask>`.
#[derive(Debug, Clone, Copy)]
pub struct PauliAction {
    pub x_mask: usize,
    pub z_mask: usize,
    pub phase: Complex64,
}

impl PauliString {
    pub fn identity(n: usize) -> Self {
        Self { coefficient: Complex64::new(1.0, 0.0), letters: vec![Pauli::I; n] }
    }

    pub fn new(coefficient: Complex64, letters: Vec<Pauli>) -> Self {
        Self { coefficient, letters }
    }

    /// Builds a string from (site, letter) pairs. Repeated sites multiply in
    /// the given order, so `[(0, Z), (0, Y)]` yields `-i X_0`.
    pub fn from_sites(n: usize, sites: &[(usize, Pauli)]) -> Result<Self> {
        let mut out = Self::identity(n);
        for &(site, p) in sites {
            if site >= n {
                return Err(SimError::QubitOutOfRange { index: site, n_qubits: n });
            }
            let (phase, letter) = out.letters[site].mul(p);
            out.coefficient *= phase;
            out.letters[site] = letter;
        }
        Ok(out)
    }

    pub fn single(n: usize, site: usize, p: Pauli) -> Result<Self> {
        Self::from_sites(n, &[(site, p)])
    }

    pub fn n_qubits(&self) -> usize {
        self.letters.len()
    }

    pub fn scaled(mut self, factor: Complex64) -> Self {
        self.coefficient *= factor;
        self
    }

    /// Sites carrying a non-identity letter.
    pub fn support(&self) -> Vec<usize> {
        self.letters
            .iter()
            .enumerate()
            .filter(|(_, &p)| p != Pauli::I)
            .map(|(i, _)| i)
            .collect()
    }

    pub fn weight(&self) -> usize {
        self.letters.iter().filter(|&&p| p != Pauli::I).count()
    }

    pub fn is_hermitian(&self) -> bool {
        self.coefficient.im.abs() <= 1e-12 * self.coefficient.norm().max(1.0)
    }

    pub fn commutes_with(&self, other: &PauliString) -> bool {
        let anti = self
            .letters
            .iter()
            .zip(&other.letters)
            .filter(|(&a, &b)| a != Pauli::I && b != Pauli::I && a != b)
            .count();
        anti % 2 == 0
    }

    pub fn action(&self) -> PauliAction {
        let mut x_mask = 0usize;
        let mut z_mask = 0usize;
        let mut n_y = 0usize;
        for (k, p) in self.letters.iter().enumerate() {
            match p {
                Pauli::I => {}
                Pauli::X => x_mask |= 1 << k,
                Pauli::Z => z_mask |= 1 << k,
                Pauli::Y => {
                    x_mask |= 1 << k;
                    z_mask |= 1 << k;
                    n_y += 1;
                }
            }
        }
        // Y = i X Z, so every Y contributes a factor i.
        let phase = self.coefficient * I_UNIT.powu((n_y % 4) as u32);
        PauliAction { x_mask, z_mask, phase }
    }

    /// Dense `2^n x 2^n` matrix; meant for oracles and small checks.
    pub fn to_dense(&self) -> DMatrix<Complex64> {
        let dim = 1usize << self.n_qubits();
        let act = self.action();
        let mut m = DMatrix::zeros(dim, dim);
        for k in 0..dim {
            let sign = if (k & act.z_mask).count_ones() % 2 == 1 { -1.0 } else { 1.0 };
            m[(k ^ act.x_mask, k)] = act.phase * sign;
        }
        m
    }
}

impl Mul for &PauliString {
    type Output = PauliString;

    fn mul(self, rhs: &PauliString) -> PauliString {
        assert_eq!(self.n_qubits(), rhs.n_qubits(), "Pauli strings on different registers");
        let mut coefficient = self.coefficient * rhs.coefficient;
        let letters = self
            .letters
            .iter()
            .zip(&rhs.letters)
            .map(|(&a, &b)| {
                let (phase, p) = a.mul(b);
                coefficient *= phase;
                p
            })
            .collect();
        PauliString { coefficient, letters }
    }
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let c = self.coefficient;
        if c.im == 0.0 {
            write!(f, "{}*", c.re)?;
        } else {
            write!(f, "({}{:+}i)*", c.re, c.im)?;
        }
        for p in &self.letters {
            write!(f, "{}", p.as_char())?;
        }
        Ok(())
    }
}

impl FromStr for PauliString {
    type Err = SimError;

    /// Parses a bare letter string such as `"ZXZI"` (site 0 first).
    fn from_str(s: &str) -> Result<Self> {
        let letters = s
            .chars()
            .map(|c| {
                Pauli::from_char(c)
                    .ok_or_else(|| SimError::InvalidArgument(format!("bad Pauli letter {c:?}")))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { coefficient: Complex64::new(1.0, 0.0), letters })
    }
}
