//! The discriminating experiment: prepare many copies of the initial state,
//! let each reduce, keep the energy-zero outcomes and look at their total
//! spin.
//!
//! Under the projection postulate every energy-zero outcome is the singlet
//! and `⟨Ŝ²⟩ = 0`. Under a stochastic model the energy-zero outcomes are
//! spread over the sphere of states `|θ,φ⟩` and the ensemble average of `Ŝ²`
//! is `1 + E[sin θ cos φ]`, which vanishes only for the singlet.

mod histogram;

pub use histogram::{sphere_histogram, HistogramBin, SphereHistogram};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::noise::trajectory_seed;
use crate::qstate::{self, EnergyLevel, SphereCoordinates, StateVector};
use crate::reduction::{self, ReductionModel, SimulationParams, Trajectory};
use crate::stats::{binomial_se, Estimate};

/// Projections with a smaller norm are treated as absent.
pub const ZERO_PROJECTION_TOLERANCE: f64 = 1e-12;

/// Result of one collapsed trajectory.
#[derive(Clone, Debug, PartialEq)]
pub struct OutcomeRecord {
    pub index: u64,
    pub seed: u64,
    pub eigenvalue: EnergyLevel,
    pub final_state: StateVector,
    /// Position of the normalized energy-zero component on the sphere,
    /// present only for energy-zero outcomes.
    pub sphere: Option<SphereCoordinates>,
    pub steps: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FailureKind {
    /// The generator variance stayed above tolerance for `max_steps` steps.
    NoCollapse,
    /// The generators collapsed but the energy is still uncertain.
    EnergyUndetermined,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct FailedTrajectory {
    pub index: u64,
    pub seed: u64,
    pub steps: u64,
    pub kind: FailureKind,
}

/// Records of an ensemble run, in trajectory order, and the trajectories
/// that had to be excluded.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Ensemble {
    pub records: Vec<OutcomeRecord>,
    pub failures: Vec<FailedTrajectory>,
}

impl Ensemble {
    pub fn n_failed(&self) -> usize {
        self.failures.len()
    }

    pub fn degenerate(&self) -> impl Iterator<Item = &OutcomeRecord> {
        degenerate(&self.records)
    }
}

fn degenerate(records: &[OutcomeRecord]) -> impl Iterator<Item = &OutcomeRecord> {
    records.iter().filter(|r| r.eigenvalue == EnergyLevel::Zero)
}

/// Classifies a collapsed trajectory and, for energy zero, locates it on
/// the sphere.
pub fn outcome_record(index: u64, trajectory: &Trajectory, tol: f64) -> Result<OutcomeRecord> {
    let eigenvalue = reduction::classify_energy(&trajectory.final_state, tol)?;
    let sphere = if eigenvalue == EnergyLevel::Zero {
        let (_, projected) = trajectory
            .final_state
            .project_onto(EnergyLevel::Zero.eigenspace(), ZERO_PROJECTION_TOLERANCE);
        let projected = projected.ok_or(Error::Subspace { magnitude: 1.0 })?;
        Some(qstate::bloch_coordinates(&projected)?)
    } else {
        None
    };
    Ok(OutcomeRecord {
        index,
        seed: trajectory.seed,
        eigenvalue,
        final_state: trajectory.final_state,
        sphere,
        steps: trajectory.steps_taken,
    })
}

/// Runs `n` trajectories from `initial`, keeping unfinished ones. Trajectory
/// `i` uses seed [`trajectory_seed`]`(master_seed, i)`.
pub fn run_trajectories(
    initial: &StateVector,
    model: &ReductionModel,
    n: usize,
    params: &SimulationParams,
    master_seed: u64,
) -> Result<Vec<Trajectory>> {
    check_ensemble(model, n, params)?;
    let one = |i: u64| -> Result<Trajectory> {
        match reduction::run_trajectory(initial, model, params, trajectory_seed(master_seed, i)) {
            Err(Error::NoCollapse { trajectory }) => Ok(*trajectory),
            other => other,
        }
    };
    map_indices(n, one)
}

/// Runs the experiment from the prepared state [`qstate::initial_state`].
/// Trajectories that fail to collapse are listed in
/// [`Ensemble::failures`] and excluded from the records.
pub fn run_ensemble(
    model: &ReductionModel,
    n: usize,
    params: &SimulationParams,
    master_seed: u64,
) -> Result<Ensemble> {
    let trajectories = run_trajectories(&qstate::initial_state(), model, n, params, master_seed)?;
    assemble(trajectories, params)
}

/// Same as [`run_ensemble`] on the calling thread only.
pub fn run_ensemble_serial(
    model: &ReductionModel,
    n: usize,
    params: &SimulationParams,
    master_seed: u64,
) -> Result<Ensemble> {
    check_ensemble(model, n, params)?;
    let initial = qstate::initial_state();
    let trajectories = (0..n as u64)
        .map(|i| {
            match reduction::run_trajectory(
                &initial,
                model,
                params,
                trajectory_seed(master_seed, i),
            ) {
                Err(Error::NoCollapse { trajectory }) => Ok(*trajectory),
                other => other,
            }
        })
        .collect::<Result<Vec<_>>>()?;
    assemble(trajectories, params)
}

fn check_ensemble(model: &ReductionModel, n: usize, params: &SimulationParams) -> Result<()> {
    if n == 0 {
        return Err(Error::Params("ensemble size must be at least 1".into()));
    }
    reduction::validate_model(model)?;
    params.validate()
}

#[cfg(feature = "parallel")]
fn map_indices<T, F>(n: usize, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(u64) -> Result<T> + Sync + Send,
{
    use rayon::prelude::*;
    (0..n as u64).into_par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
fn map_indices<T, F>(n: usize, f: F) -> Result<Vec<T>>
where
    F: Fn(u64) -> Result<T>,
{
    (0..n as u64).map(f).collect()
}

fn assemble(trajectories: Vec<Trajectory>, params: &SimulationParams) -> Result<Ensemble> {
    let mut ensemble = Ensemble::default();
    for (i, t) in trajectories.iter().enumerate() {
        let failure = |kind| FailedTrajectory {
            index: i as u64,
            seed: t.seed,
            steps: t.steps_taken,
            kind,
        };
        if !t.collapsed {
            ensemble.failures.push(failure(FailureKind::NoCollapse));
            continue;
        }
        match outcome_record(i as u64, t, params.collapse_tol) {
            Ok(record) => ensemble.records.push(record),
            Err(Error::NotCollapsed { .. }) => ensemble
                .failures
                .push(failure(FailureKind::EnergyUndetermined)),
            Err(e) => return Err(e),
        }
    }
    Ok(ensemble)
}

/// Probability of finding ↑↓ in an energy-zero outcome: the mean of
/// `cos²(θ/2)` over energy-zero records.
pub fn estimate_p(records: &[OutcomeRecord]) -> Result<Estimate> {
    Estimate::from_samples(degenerate(records).filter_map(|r| r.sphere).map(|s| {
        let c = (0.5 * s.theta).cos();
        c * c
    }))
    .ok_or(Error::NoDegenerateOutcomes)
}

/// Mean of `⟨Σ₁z⟩` over all final states. Weak conservation makes this equal
/// to `⟨Σ₁z⟩` of the initial state.
pub fn conservation_check(records: &[OutcomeRecord]) -> Result<Estimate> {
    let sigma = qstate::sigma_1z();
    let values = records
        .iter()
        .map(|r| qstate::expectation(&r.final_state, &sigma))
        .collect::<Result<Vec<_>>>()?;
    Estimate::from_samples(values).ok_or(Error::EmptyEnsemble)
}

/// Mean of `⟨Ŝ²⟩` over the final states of energy-zero records.
pub fn s_squared_statistic(records: &[OutcomeRecord]) -> Result<Estimate> {
    let s2 = qstate::s_squared();
    let values = degenerate(records)
        .map(|r| qstate::expectation(&r.final_state, &s2))
        .collect::<Result<Vec<_>>>()?;
    Estimate::from_samples(values).ok_or(Error::NoDegenerateOutcomes)
}

/// The same statistic from the sphere coordinates, `1 + sin θ cos φ`.
pub fn s_squared_from_sphere(records: &[OutcomeRecord]) -> Result<Estimate> {
    Estimate::from_samples(
        degenerate(records)
            .filter_map(|r| r.sphere)
            .map(|s| 1.0 + s.theta.sin() * s.phi.cos()),
    )
    .ok_or(Error::NoDegenerateOutcomes)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LudersOutcome {
    pub eigenvalue: EnergyLevel,
    pub probability: f64,
    pub state: StateVector,
}

/// Outcome table of a projective energy measurement.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LudersTable {
    pub outcomes: Vec<LudersOutcome>,
    /// Eigenvalues whose eigenspace projection vanishes.
    pub excluded: Vec<EnergyLevel>,
}

impl LudersTable {
    pub fn outcome(&self, eigenvalue: EnergyLevel) -> Option<&LudersOutcome> {
        self.outcomes.iter().find(|o| o.eigenvalue == eigenvalue)
    }

    pub fn probability(&self, eigenvalue: EnergyLevel) -> f64 {
        self.outcome(eigenvalue).map_or(0.0, |o| o.probability)
    }
}

/// Projection-postulate prediction for an energy measurement on `initial`:
/// each eigenvalue occurs with the squared norm of the eigenspace
/// projection and leaves the normalized projection behind.
pub fn luders_reference(initial: &StateVector) -> LudersTable {
    let mut table = LudersTable {
        outcomes: Vec::new(),
        excluded: Vec::new(),
    };
    for level in EnergyLevel::ALL {
        match initial.project_onto(level.eigenspace(), ZERO_PROJECTION_TOLERANCE) {
            (probability, Some(state)) => table.outcomes.push(LudersOutcome {
                eigenvalue: level,
                probability,
                state,
            }),
            (_, None) => table.excluded.push(level),
        }
    }
    table
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct OutcomeFrequency {
    pub eigenvalue: EnergyLevel,
    pub count: usize,
    pub frequency: f64,
    pub se: f64,
}

/// Summary statistics of an [`Ensemble`]. Estimators that need energy-zero
/// outcomes are `None` when there are none.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EnsembleReport {
    pub frequencies: Vec<OutcomeFrequency>,
    pub p_hat: Option<Estimate>,
    pub conservation: Option<Estimate>,
    pub s2: Option<Estimate>,
    pub n_total: usize,
    pub n_degenerate: usize,
    pub n_failed: usize,
}

impl EnsembleReport {
    pub fn from_ensemble(ensemble: &Ensemble) -> Self {
        let records = &ensemble.records;
        let n_total = records.len();
        let frequencies = EnergyLevel::ALL
            .iter()
            .map(|&eigenvalue| {
                let count = records
                    .iter()
                    .filter(|r| r.eigenvalue == eigenvalue)
                    .count();
                let frequency = if n_total == 0 {
                    0.0
                } else {
                    count as f64 / n_total as f64
                };
                OutcomeFrequency {
                    eigenvalue,
                    count,
                    frequency,
                    se: binomial_se(frequency, n_total),
                }
            })
            .collect();
        Self {
            frequencies,
            p_hat: estimate_p(records).ok(),
            conservation: conservation_check(records).ok(),
            s2: s_squared_statistic(records).ok(),
            n_total,
            n_degenerate: ensemble.degenerate().count(),
            n_failed: ensemble.n_failed(),
        }
    }

    pub fn frequency(&self, eigenvalue: EnergyLevel) -> &OutcomeFrequency {
        self.frequencies
            .iter()
            .find(|f| f.eigenvalue == eigenvalue)
            .expect("all eigenvalues present")
    }
}
