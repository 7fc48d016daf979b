//! Thermal-state partition functions from variational imaginary-time evolution.
//!
//! The crate simulates a purification-based preparation of Gibbs states: a
//! parameterized circuit on a doubled register holds a thermofield-double
//! candidate, its parameters follow an imaginary-time variational equation of
//! motion, and partition-function curves are reconstructed from state overlaps
//! along the trajectory. A dense-matrix reference implementation of the same
//! quantities ships alongside for validation.
//!
//! Layout:
//! - [`statevector`]: dense state simulation, gates, sampling, partial trace
//! - [`hamiltonian`]: Pauli-string sums, parsing, spectral moments
//! - [`ansatz`]: parameterized circuits and their derivative states
//! - [`varqite`]: the variational equation of motion and its integrator
//! - [`partition`]: overlap-based partition-function estimators
//! - [`oracle`]: dense diagonalization reference for everything above
//!
//! The crate is `no_std` + `alloc`; all randomness flows through explicit
//! seeds, so every result is reproducible.

#![cfg_attr(not(test), no_std)]
// Validation guards are written `!(x > 0.0)` so NaN fails them; the matrix
// routines use explicit row/column indices to mirror their textbook forms.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
#![allow(clippy::needless_range_loop)]

extern crate alloc;

pub mod ansatz;
pub mod error;
pub mod hamiltonian;
pub mod linalg;
mod math;
pub mod oracle;
pub mod partition;
pub mod statevector;
pub mod varqite;

pub use error::Error;

/// Crate-wide result alias.
pub type Result<T> = core::result::Result<T, Error>;
