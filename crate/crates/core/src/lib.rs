//! Simulation and analysis of an 18-qubit hyper-entangled GHZ experiment:
//! six photons, each carrying polarization, path and orbital-angular-momentum
//! qubits.

pub mod analysis;
pub mod calibration;
pub mod cli;
pub mod ensemble;
pub mod error;
pub mod fit;
pub mod io;
pub mod optics;
pub mod pipeline;
pub mod source;
pub mod state;

pub use error::{Error, Result};
