//! WebAssembly bindings for the browser demo in `www/`.
//!
//! Every exported function takes plain numbers and strings and returns a JSON
//! string. Each wraps a plain Rust function of the same purpose that can be
//! called and tested natively.

use collapse_lab::experiment::{
    luders_reference, run_ensemble, run_trajectories, sphere_histogram, EnsembleReport,
    LudersTable, SphereHistogram,
};
use collapse_lab::qstate::{self, EnergyLevel, SphereCoordinates};
use collapse_lab::reduction::{
    martingale_statistics, model_energy, model_local_spins, run_trajectory, ReductionModel,
    SeriesPoint, SimulationParams, Snapshot, SnapshotQuantity,
};
use collapse_lab::{Error, Result};
use serde::Serialize;
use wasm_bindgen::prelude::*;

/// Largest ensemble the page may request; the browser runs on one thread.
pub const MAX_TRAJECTORIES: usize = 20_000;
/// Step budget per trajectory, kept well below the native default so a
/// pathological setting cannot freeze the page.
pub const MAX_STEPS: u64 = 2_000_000;

const Z_BINS: usize = 20;
const PHI_BINS: usize = 36;

fn model(name: &str, sigma: f64) -> Result<ReductionModel> {
    match name {
        "energy" => Ok(model_energy(sigma)),
        "local-spins" => Ok(model_local_spins(sigma)),
        other => Err(Error::Params(format!("unknown model {other:?}"))),
    }
}

fn ensemble_size(n: usize) -> Result<usize> {
    if n == 0 || n > MAX_TRAJECTORIES {
        return Err(Error::Params(format!(
            "number of trajectories must be between 1 and {MAX_TRAJECTORIES}"
        )));
    }
    Ok(n)
}

fn params(dt: f64, snapshot_count: usize, snapshot_span: Option<u64>) -> SimulationParams {
    SimulationParams {
        dt,
        max_steps: MAX_STEPS,
        snapshot_count,
        snapshot_span,
        ..SimulationParams::default()
    }
}

#[derive(Debug, Serialize)]
pub struct ExperimentResult {
    pub report: EnsembleReport,
    pub projection: LudersTable,
    /// Sphere coordinates of every energy-zero outcome.
    pub points: Vec<SphereCoordinates>,
    pub histogram: Option<SphereHistogram>,
}

pub fn experiment(
    model_name: &str,
    sigma: f64,
    n: usize,
    dt: f64,
    seed: u64,
) -> Result<ExperimentResult> {
    let model = model(model_name, sigma)?;
    let ensemble = run_ensemble(&model, ensemble_size(n)?, &params(dt, 2, None), seed)?;
    Ok(ExperimentResult {
        report: EnsembleReport::from_ensemble(&ensemble),
        projection: luders_reference(&qstate::initial_state()),
        points: ensemble.degenerate().filter_map(|r| r.sphere).collect(),
        histogram: sphere_histogram(&ensemble.records, Z_BINS, PHI_BINS).ok(),
    })
}

#[derive(Debug, Serialize)]
pub struct TrajectoryResult {
    pub snapshots: Vec<Snapshot>,
    pub collapsed: bool,
    pub steps: u64,
    pub eigenvalue: Option<EnergyLevel>,
    pub sphere: Option<SphereCoordinates>,
}

pub fn trajectory(
    model_name: &str,
    sigma: f64,
    dt: f64,
    seed: u64,
    snapshots: usize,
    span: u64,
) -> Result<TrajectoryResult> {
    let model = model(model_name, sigma)?;
    let params = params(dt, snapshots, Some(span));
    let t = match run_trajectory(&qstate::initial_state(), &model, &params, seed) {
        Ok(t) => t,
        Err(Error::NoCollapse { trajectory }) => *trajectory,
        Err(e) => return Err(e),
    };
    let record = t
        .collapsed
        .then(|| collapse_lab::experiment::outcome_record(0, &t, params.collapse_tol).ok())
        .flatten();
    Ok(TrajectoryResult {
        collapsed: t.collapsed,
        steps: t.steps_taken,
        eigenvalue: record.as_ref().map(|r| r.eigenvalue),
        sphere: record.and_then(|r| r.sphere),
        snapshots: t.snapshots,
    })
}

#[derive(Debug, Serialize)]
pub struct MartingaleResult {
    pub energy: Vec<SeriesPoint>,
    pub variance: Vec<SeriesPoint>,
    pub n_uncollapsed: usize,
}

pub fn martingale(
    model_name: &str,
    sigma: f64,
    n: usize,
    dt: f64,
    seed: u64,
    snapshots: usize,
    span: u64,
) -> Result<MartingaleResult> {
    let model = model(model_name, sigma)?;
    let trajectories = run_trajectories(
        &qstate::initial_state(),
        &model,
        ensemble_size(n)?,
        &params(dt, snapshots, Some(span)),
        seed,
    )?;
    Ok(MartingaleResult {
        energy: martingale_statistics(&trajectories, SnapshotQuantity::MeanEnergy)?,
        variance: martingale_statistics(&trajectories, SnapshotQuantity::EnergyVariance)?,
        n_uncollapsed: trajectories.iter().filter(|t| !t.collapsed).count(),
    })
}

fn to_js<T: Serialize>(result: Result<T>) -> Result<String, JsError> {
    let value = result.map_err(|e| JsError::new(&e.to_string()))?;
    serde_json::to_string(&value).map_err(|e| JsError::new(&e.to_string()))
}

/// Runs `n` trajectories of the total-spin experiment.
#[wasm_bindgen(js_name = runExperiment)]
pub fn run_experiment_js(
    model: &str,
    sigma: f64,
    n: usize,
    dt: f64,
    seed: u64,
) -> Result<String, JsError> {
    to_js(experiment(model, sigma, n, dt, seed))
}

/// One trajectory sampled at `snapshots` evenly spaced steps up to `span`.
#[wasm_bindgen(js_name = runTrajectory)]
pub fn run_trajectory_js(
    model: &str,
    sigma: f64,
    dt: f64,
    seed: u64,
    snapshots: usize,
    span: u64,
) -> Result<String, JsError> {
    to_js(trajectory(model, sigma, dt, seed, snapshots, span))
}

/// Ensemble mean and variance of the energy over time.
#[wasm_bindgen(js_name = runMartingale)]
pub fn run_martingale_js(
    model: &str,
    sigma: f64,
    n: usize,
    dt: f64,
    seed: u64,
    snapshots: usize,
    span: u64,
) -> Result<String, JsError> {
    to_js(martingale(model, sigma, n, dt, seed, snapshots, span))
}
