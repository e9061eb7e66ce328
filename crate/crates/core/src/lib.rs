//! Tomography and entanglement detection of two-qubit Werner states measured
//! with a qubit SIC-POVM on each photon, under Poisson fluctuation of the
//! number of pairs.
//!
//! Pipeline: [`states`] prepares the Werner state, [`simulate`] draws noisy
//! coincidence counts for the 16 outcomes of [`povm`], [`reconstruct`] fits a
//! physical density matrix by chi-squared minimization, and [`metrics`]
//! scores the estimate. [`experiment`] drives parameter sweeps end to end.

pub mod error;
pub mod experiment;
pub mod metrics;
pub mod povm;
pub mod qmat;
pub mod reconstruct;
pub mod simulate;
pub mod states;

pub use error::{Error, Result};
