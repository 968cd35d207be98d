//! Trapped-ion analogues of linear and nonlinear optical processes.
//!
//! A three-level ion in a two-dimensional trap, driven by two lasers on
//! vibrational sidebands, couples its two motional modes through a
//! stimulated Raman transition. This crate builds the full and effective
//! Hamiltonians of that system on truncated Fock lattices, evolves states
//! under them, and provides the measurement and phase-space diagnostics
//! used by the canned [`scenarios`].

pub mod cli;
pub mod dynamics;
pub mod error;
pub mod hamiltonians;
pub mod hilbert;
pub mod measurement;
pub mod operator;
pub mod output;
pub mod phasespace;
pub mod scenarios;

pub use error::{Error, Result};
pub use num_complex::Complex64 as C64;
