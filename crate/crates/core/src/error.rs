use thiserror::Error;

use crate::reduction::Trajectory;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("state norm {norm} deviates from 1 by more than {tolerance:e}")]
    Norm { norm: f64, tolerance: f64 },

    #[error("state has amplitude {magnitude:e} outside the degenerate subspace")]
    Subspace { magnitude: f64 },

    #[error("expectation has imaginary part {imaginary:e}; operator is not Hermitian")]
    Hermiticity { imaginary: f64 },

    #[error("matrix is not Hermitian (max deviation {deviation:e})")]
    NotHermitian { deviation: f64 },

    #[error("{first} and {second} do not commute (commutator norm {norm:e})")]
    NonCommuting {
        first: String,
        second: String,
        norm: f64,
    },

    #[error("reduction model has no generators")]
    EmptyModel,

    #[error("model has {generators} generators but {couplings} couplings")]
    CouplingCount { generators: usize, couplings: usize },

    #[error("coupling {index} must be positive and finite, got {value}")]
    Coupling { index: usize, value: f64 },

    #[error("invalid simulation parameters: {0}")]
    Params(String),

    #[error("generator index {index} out of range for model with {len} generators")]
    Index { index: usize, len: usize },

    #[error("expected {expected} noise increments, got {actual}")]
    NoiseLength { expected: usize, actual: usize },

    #[error("pre-renormalization norm deviated by {deviation:e}; time step too large")]
    Step { deviation: f64 },

    #[error("trajectory with seed {} did not collapse within {} steps", .trajectory.seed, .trajectory.steps_taken)]
    NoCollapse { trajectory: Box<Trajectory> },

    #[error("state has energy variance {variance:e}, above tolerance {tolerance:e}")]
    NotCollapsed { variance: f64, tolerance: f64 },

    #[error("trajectories do not share a snapshot schedule")]
    ScheduleMismatch,

    #[error("no trajectories given")]
    EmptyEnsemble,

    #[error("no outcome with energy eigenvalue 0")]
    NoDegenerateOutcomes,

    #[error("histogram needs at least one bin per axis, got {z_bins}x{phi_bins}")]
    Bins { z_bins: usize, phi_bins: usize },
}
