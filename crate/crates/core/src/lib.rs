//! Simulation and analysis of a quantum point contact used as a
//! single-photon detector.
//!
//! * [`transport`]: quantized, thermally broadened channel conductance.
//! * [`charge`]: trap ensemble, absorption by wavelength and hole capture.
//! * [`simulate`]: dark runs, photon exposures and gate sweeps.
//! * [`analyze`]: step detection, interval statistics, height correlation
//!   and saturation.
//! * [`cli`]: config files and the command implementations behind the
//!   `qpc-detector` binary.

// `!(x > 0.0)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analyze;
pub mod charge;
pub mod cli;
pub mod config;
pub mod error;
pub mod seed;
pub mod simulate;
pub mod trace;
pub mod transport;

pub use error::{Error, Result};
