//! Exact time evolution of an EPR qubit pair coupled to a random-field XXZ
//! spin chain.
//!
//! The pipeline for a single disorder realization is
//!
//! ```text
//! SectorBasis ─► build_hamiltonian ─► diagonalize ─► evolve ─► reduce_to_pair ─► measures
//!                      ▲                                 ▲
//!               draw_fields(seed)                 initial_state (EPR ⊗ Néel)
//! ```
//!
//! and [`experiment::run_ensemble`] repeats it over deterministically seeded
//! realizations, averaging the scalar entanglement measures. The
//! [`analysis`] module turns ensemble curves into saturation values, power
//! law and exponential fits, tΔ collapses and light-cone maps.
//!
//! Units: ħ = 1 and J sets the energy scale, so times are in 1/J. Spin
//! operators are spin-1/2 (eigenvalues ±1/2).

pub mod analysis;
pub mod basis;
pub mod cli;
pub mod dynamics;
pub mod error;
pub mod experiment;
pub mod measures;
pub mod model;
pub mod reduced;

pub use error::{Error, Result};
