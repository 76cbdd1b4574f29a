//! Variational quantum classifiers seen through their loss Hessian.
//!
//! * [`sim`]: dense statevector simulator with Pauli-Z readout.
//! * [`diff`]: parameter-shift gradients and Hessians, squared-loss chain
//!   rule and a finite-difference reference.
//! * [`ansatz`]: the 4-qubit parity and 8-qubit tabular classifiers.
//! * [`trainer`]: gradient descent and the adaptive Hessian learning-rate schedule.
//! * [`spectra`]: Jacobi eigensolver, stationary-point classes, landscape slices.
//! * [`dataio`]: datasets and CSV/JSON artifacts.

pub mod ansatz;
pub mod dataio;
pub mod diff;
pub mod error;
pub mod objective;
pub mod sim;
pub mod spectra;
pub mod trainer;

pub use error::{Error, Result};
