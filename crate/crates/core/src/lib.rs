//! Measurement fidelity matrices for qubit readout.
//!
//! A fidelity matrix `K` over an ordered qubit layout holds
//! `K[i, j] = p(observe x_j | prepare x_i)`, with basis states indexed by the
//! integer value of their bitstring (layout position 0 is the most
//! significant bit). The crate builds such matrices from counts, approximates
//! large ones from small-subsystem cumulants or cluster products, measures
//! correlated readout error, mitigates observed distributions, and ships a
//! seeded device simulator to validate all of it.

pub mod cli;
pub mod counts;
pub mod cumulant;
pub mod error;
pub mod estimate;
pub mod layout;
pub mod matrix;
pub mod metrics;
pub mod mitigate;
pub mod simdevice;

/// Widest layout handled densely (a 4096 × 4096 matrix).
pub const MAX_QUBITS: usize = 12;

pub use counts::CountsRecord;
pub use cumulant::{CumulantSet, CumulantTensor, Scf};
pub use error::{MfmError, Result};
pub use layout::{BitString, QubitLayout, SubsystemSelection};
pub use matrix::{Distribution, FidelityMatrix, MatrixFlags};
pub use simdevice::{CostStrategy, NoiseModel, SpectatorMixing};
