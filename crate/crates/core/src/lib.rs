//! Simulation core for preparing and probing symmetry-protected topological
//! ground states of the open Ising-cluster chain on a noisy gate model.
//!
//! The pipeline runs: build the Hamiltonian ([`model`]), embed `e^{-βH}` in a
//! unitary with one ancilla ([`dilation`]), compile the postselected result into
//! a shallow ECR/U3 brick circuit ([`ansatz`]), run it under depolarizing and
//! readout noise ([`noise`]), extrapolate to zero noise ([`zne`]), and measure
//! ([`observables`]).

pub mod ansatz;
pub mod dilation;
pub mod error;
pub mod linalg;
pub mod model;
pub mod noise;
pub mod observables;
pub mod pauli;
pub mod qstate;
pub mod zne;

pub use error::{Result, SimError};
pub use pauli::{Pauli, PauliString};
pub use qstate::{DensityMatrix, GateOp, MeasurementRecord, Statevector};
