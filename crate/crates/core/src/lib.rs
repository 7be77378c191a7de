//! Resonance-fluorescence correlations and two-photon (Hong-Ou-Mandel)
//! interference between two independently trapped, continuously driven ions.
//!
//! The crate is organised along the measurement chain:
//!
//! * [`ion_model`] builds the 8-level S/P/D Hamiltonian, jump operators and
//!   Lindblad generator of a single ion.
//! * [`dynamics`] computes steady states, excitation spectra and the
//!   first- and second-order correlation functions of the collected light.
//! * [`interference`] combines two identical emitters on a 50/50 beam
//!   splitter and predicts the cross-port coincidence function.
//! * [`detection`] applies collection losses, timing response and
//!   uncorrelated background.
//! * [`montecarlo`] produces synthetic photon time tags from quantum-jump
//!   trajectories and routes them through the beam splitter.
//! * [`correlator`] histograms time tags into normalised coincidence curves.

// `!(x > 0.0)` is the NaN-rejecting form of every guard.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod correlator;
pub mod detection;
pub mod dynamics;
pub mod error;
pub mod interference;
pub mod ion_model;
pub mod linalg;
pub mod montecarlo;
pub mod report;
pub mod timetag;

pub use error::{Error, Result};
