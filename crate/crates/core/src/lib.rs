//! Simulation of a distributed charge qubit: a tight-binding wire with an
//! asynchronized pair of two-level systems at its centre, treated as a closed
//! system, as an open system through an effective non-Hermitian Hamiltonian,
//! and under Gaussian white-noise dephasing.

pub mod dynamics;
pub mod error;
mod assignment;
pub mod closed_solver;
pub mod linalg;
pub mod liouville;
pub mod model;
pub mod open_solver;
pub mod propagate;

pub use error::{Error, Result};
pub use closed_solver::{QuantumState, PairDescriptor};
pub use model::{ChainSpec, EffectiveHamiltonian, Site, SiteIndex};
