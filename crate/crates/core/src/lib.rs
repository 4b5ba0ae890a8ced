//! Simulation of energy-driven stochastic state reduction for two
//! non-interacting spins in a magnetic field, and of the total-spin
//! experiment that tells it apart from projective (Lüders) measurement.
//!
//! - [`qstate`]: states and observables on the four-dimensional space.
//! - [`reduction`]: the stochastic Schrödinger equation and its trajectories.
//! - [`experiment`]: ensembles, estimators and the projection-postulate oracle.

pub mod error;
pub mod experiment;
pub mod noise;
pub mod qstate;
pub mod reduction;
pub mod stats;

pub use error::{Error, Result};
