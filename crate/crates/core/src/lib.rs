//! Composite Trotter/QDrift Hamiltonian simulation.
//!
//! Compiles a Hamiltonian `H = Σ h_i H_i` into gate sequences of term
//! exponentials `e^{i h_i H_i τ}` using Trotter-Suzuki formulas, QDrift
//! sampling, or composite channels that simulate a partition `A` with Trotter
//! and `B` with QDrift. Every cost and error bound is computed analytically
//! and can be checked against exact superoperator simulations.

pub mod cli;
pub mod commutators;
pub mod composite;
pub mod error;
pub mod framework;
pub mod hamiltonian;
pub mod linalg;
pub mod metrics;
pub mod order;
pub mod partition;
pub mod qdrift;
pub mod rng;
pub mod sequence;
pub mod trotter;

pub use error::{Error, Result};
pub use hamiltonian::{Hamiltonian, Partition};
pub use order::Order;
