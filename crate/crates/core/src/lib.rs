//! Exact simulation of transverse-field Ising annealing.
//!
//! The crate builds the Hamiltonians of forward, reverse and diabatic
//! annealing protocols, propagates states under arbitrary schedules, and
//! measures spectra, adiabatic bounds and success metrics on top of them.

pub mod baselines;
pub mod error;
pub mod evolve;
pub mod instances;
pub mod ising;
pub mod metrics;
pub mod path;
pub mod schedule;
pub mod schedule_opt;
pub mod spectral;

pub use error::{Error, Result};
