//! Stochastic reduction dynamics.
//!
//! A [`ReductionModel`] is a list of commuting Hermitian generators `A_k`,
//! each commuting with the Hamiltonian, with couplings `σ_k`. The state
//! obeys the norm-preserving Itô equation
//!
//! ```text
//! dψ = [−iĤ − ⅛ Σ_k σ_k² (A_k − ⟨A_k⟩)²] ψ dt + Σ_k (σ_k/2)(A_k − ⟨A_k⟩) ψ dW_k
//! ```
//!
//! under which every `⟨A_k⟩` is a martingale and every `Var(A_k)` a
//! supermartingale, so trajectories end in a joint eigenspace of the
//! generators with Born-rule frequencies. Integration is Euler–Maruyama
//! with a renormalization after every step.

use nalgebra::Vector4;
use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::noise::NoiseStream;
use crate::qstate::{self, EnergyLevel, Observable, StateVector};
use crate::stats::Estimate;

/// Commutators below this norm count as zero.
pub const COMMUTATOR_TOLERANCE: f64 = 1e-10;
/// Pre-renormalization norm drift that aborts a step.
pub const MAX_STEP_DEVIATION: f64 = 0.5;
pub const DEFAULT_COUPLING: f64 = 1.0;

type Amplitudes = Vector4<Complex64>;

const MINUS_I: Complex64 = Complex64::new(0.0, -1.0);

#[derive(Clone, Debug, PartialEq)]
pub struct ReductionModel {
    pub generators: Vec<Observable>,
    pub couplings: Vec<f64>,
}

impl ReductionModel {
    pub fn new(generators: Vec<Observable>, couplings: Vec<f64>) -> Self {
        Self {
            generators,
            couplings,
        }
    }

    pub fn len(&self) -> usize {
        self.generators.len()
    }

    pub fn is_empty(&self) -> bool {
        self.generators.is_empty()
    }

    /// Sum of generator variances, the collapse criterion.
    pub fn total_variance(&self, state: &StateVector) -> Result<f64> {
        self.generators
            .iter()
            .map(|a| qstate::variance(state, a))
            .sum()
    }
}

/// Checks that the model is admissible: nonempty, positive couplings, every
/// generator commuting with Ĥ and with every other generator.
pub fn validate_model(model: &ReductionModel) -> Result<()> {
    if model.generators.is_empty() {
        return Err(Error::EmptyModel);
    }
    if model.generators.len() != model.couplings.len() {
        return Err(Error::CouplingCount {
            generators: model.generators.len(),
            couplings: model.couplings.len(),
        });
    }
    for (index, &value) in model.couplings.iter().enumerate() {
        if !(value > 0.0 && value.is_finite()) {
            return Err(Error::Coupling { index, value });
        }
    }
    let h = qstate::hamiltonian();
    for (k, a) in model.generators.iter().enumerate() {
        let norm = qstate::commutator_norm(a, &h);
        if norm >= COMMUTATOR_TOLERANCE {
            return Err(Error::NonCommuting {
                first: format!("generator {k}"),
                second: "the Hamiltonian".into(),
                norm,
            });
        }
        for (j, b) in model.generators.iter().enumerate().skip(k + 1) {
            let norm = qstate::commutator_norm(a, b);
            if norm >= COMMUTATOR_TOLERANCE {
                return Err(Error::NonCommuting {
                    first: format!("generator {k}"),
                    second: format!("generator {j}"),
                    norm,
                });
            }
        }
    }
    Ok(())
}

/// Reduction driven by the energy alone.
pub fn model_energy(sigma: f64) -> ReductionModel {
    ReductionModel::new(vec![qstate::hamiltonian()], vec![sigma])
}

/// Reduction driven independently by the z-spin of each particle.
pub fn model_local_spins(sigma: f64) -> ReductionModel {
    ReductionModel::new(
        vec![qstate::sigma_1z(), qstate::sigma_2z()],
        vec![sigma, sigma],
    )
}

#[derive(Clone, Debug, PartialEq)]
pub struct SimulationParams {
    pub dt: f64,
    /// Threshold on the summed generator variance that counts as collapse.
    pub collapse_tol: f64,
    pub max_steps: u64,
    pub snapshot_count: usize,
    /// Number of steps the snapshot schedule spans. `None` spreads the
    /// snapshots over `max_steps`.
    pub snapshot_span: Option<u64>,
}

impl Default for SimulationParams {
    fn default() -> Self {
        Self {
            dt: 1e-3,
            collapse_tol: 1e-10,
            max_steps: 10_000_000,
            snapshot_count: 50,
            snapshot_span: None,
        }
    }
}

impl SimulationParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::Params(format!(
                "dt must be positive, got {}",
                self.dt
            )));
        }
        if !(self.collapse_tol > 0.0 && self.collapse_tol.is_finite()) {
            return Err(Error::Params(format!(
                "collapse_tol must be positive, got {}",
                self.collapse_tol
            )));
        }
        if self.max_steps == 0 {
            return Err(Error::Params("max_steps must be at least 1".into()));
        }
        if self.snapshot_span == Some(0) && self.snapshot_count > 1 {
            return Err(Error::Params(
                "snapshot_span must be positive for more than one snapshot".into(),
            ));
        }
        Ok(())
    }

    /// Step indices at which snapshots are taken, equally spaced from 0 to
    /// the span inclusive.
    pub fn snapshot_steps(&self) -> Vec<u64> {
        let span = self.snapshot_span.unwrap_or(self.max_steps) as u128;
        match self.snapshot_count {
            0 => Vec::new(),
            1 => vec![0],
            count => {
                let last = (count - 1) as u128;
                (0..count as u128)
                    .map(|j| (j * span / last) as u64)
                    .collect()
            }
        }
    }
}

/// Diagnostics recorded at one scheduled step.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Snapshot {
    pub time: f64,
    pub energy: f64,
    pub energy_variance: f64,
    pub generator_variance: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    pub final_state: StateVector,
    pub collapsed: bool,
    pub steps_taken: u64,
    pub snapshots: Vec<Snapshot>,
    pub seed: u64,
}

/// `[−iĤ − ⅛ Σ_k σ_k² (A_k − ⟨A_k⟩)²] ψ`
pub fn drift(state: &StateVector, model: &ReductionModel) -> Result<Amplitudes> {
    let psi = state.amplitudes();
    let mut out = qstate::hamiltonian().apply(state) * MINUS_I;
    for (a, &sigma) in model.generators.iter().zip(&model.couplings) {
        let mean = qstate::expectation(state, a)?;
        let centered = a.apply_to(psi) - psi.scale(mean);
        let twice = a.apply_to(&centered) - centered.scale(mean);
        out -= twice.scale(0.125 * sigma * sigma);
    }
    Ok(out)
}

/// `(σ_k/2)(A_k − ⟨A_k⟩) ψ`
pub fn diffusion(state: &StateVector, model: &ReductionModel, k: usize) -> Result<Amplitudes> {
    let (a, sigma) = model
        .generators
        .get(k)
        .zip(model.couplings.get(k))
        .ok_or(Error::Index {
            index: k,
            len: model.generators.len(),
        })?;
    let psi = state.amplitudes();
    let mean = qstate::expectation(state, a)?;
    Ok((a.apply_to(psi) - psi.scale(mean)).scale(0.5 * sigma))
}

/// Per-generator quantities shared between the collapse test and the step.
struct Centered {
    means: Vec<f64>,
    vectors: Vec<Amplitudes>,
}

impl Centered {
    fn with_capacity(n: usize) -> Self {
        Self {
            means: Vec::with_capacity(n),
            vectors: Vec::with_capacity(n),
        }
    }

    /// Fills in `⟨A_k⟩` and `(A_k − ⟨A_k⟩)ψ`; returns `Σ_k Var(A_k)`.
    fn update(&mut self, state: &StateVector, model: &ReductionModel) -> Result<f64> {
        self.means.clear();
        self.vectors.clear();
        let psi = state.amplitudes();
        let mut total = 0.0;
        for a in &model.generators {
            let applied = a.apply_to(psi);
            let mean = psi.dotc(&applied);
            if mean.im.abs() > qstate::IMAGINARY_TOLERANCE {
                return Err(Error::Hermiticity { imaginary: mean.im });
            }
            let centered = applied - psi.scale(mean.re);
            total += centered.norm_squared();
            self.means.push(mean.re);
            self.vectors.push(centered);
        }
        Ok(total)
    }
}

fn advance(
    state: &StateVector,
    model: &ReductionModel,
    hamiltonian: &Observable,
    centered: &Centered,
    dt: f64,
    noise: &[f64],
) -> Result<StateVector> {
    let psi = state.amplitudes();
    let mut drift = hamiltonian.apply(state) * MINUS_I;
    let mut kick = Amplitudes::zeros();
    for (k, a) in model.generators.iter().enumerate() {
        let sigma = model.couplings[k];
        let mean = centered.means[k];
        let v = &centered.vectors[k];
        let twice = a.apply_to(v) - v.scale(mean);
        drift -= twice.scale(0.125 * sigma * sigma);
        kick += v.scale(0.5 * sigma * noise[k]);
    }
    let next = psi + drift.scale(dt) + kick;
    let norm = next.norm();
    let deviation = (norm - 1.0).abs();
    if deviation.is_nan() || deviation > MAX_STEP_DEVIATION {
        return Err(Error::Step { deviation });
    }
    Ok(StateVector::normalized(next))
}

/// One Euler–Maruyama step with increments `noise[k] ~ Normal(0, dt)`,
/// renormalized afterwards.
pub fn step(
    state: &StateVector,
    model: &ReductionModel,
    dt: f64,
    noise: &[f64],
) -> Result<StateVector> {
    if noise.len() != model.len() {
        return Err(Error::NoiseLength {
            expected: model.len(),
            actual: noise.len(),
        });
    }
    let mut centered = Centered::with_capacity(model.len());
    centered.update(state, model)?;
    advance(state, model, &qstate::hamiltonian(), &centered, dt, noise)
}

fn snapshot(state: &StateVector, time: f64, generator_variance: f64) -> Result<Snapshot> {
    let h = qstate::hamiltonian();
    Ok(Snapshot {
        time,
        energy: qstate::expectation(state, &h)?,
        energy_variance: qstate::variance(state, &h)?,
        generator_variance,
    })
}

/// Integrates one trajectory until the generator variance drops below
/// `collapse_tol` or `max_steps` steps have been taken.
///
/// The noise is drawn from [`NoiseStream::new(seed)`](NoiseStream::new), so
/// the result is a pure function of the arguments. Snapshots scheduled after
/// collapse repeat the final state, i.e. the process is stopped there. A
/// trajectory that runs out of steps is returned inside
/// [`Error::NoCollapse`].
pub fn run_trajectory(
    initial: &StateVector,
    model: &ReductionModel,
    params: &SimulationParams,
    seed: u64,
) -> Result<Trajectory> {
    validate_model(model)?;
    params.validate()?;

    let hamiltonian = qstate::hamiltonian();
    let schedule = params.snapshot_steps();
    let mut snapshots = Vec::with_capacity(schedule.len());
    let mut noise = NoiseStream::new(seed);
    let mut increments = vec![0.0; model.len()];
    let mut centered = Centered::with_capacity(model.len());

    let mut state = *initial;
    let mut steps = 0u64;
    let mut total_variance;
    loop {
        total_variance = centered.update(&state, model)?;
        while snapshots.len() < schedule.len() && schedule[snapshots.len()] == steps {
            snapshots.push(snapshot(&state, steps as f64 * params.dt, total_variance)?);
        }
        if total_variance < params.collapse_tol || steps == params.max_steps {
            break;
        }
        noise.wiener_increments(params.dt, &mut increments);
        state = advance(
            &state,
            model,
            &hamiltonian,
            &centered,
            params.dt,
            &increments,
        )?;
        steps += 1;
    }

    for &s in &schedule[snapshots.len()..] {
        snapshots.push(snapshot(&state, s as f64 * params.dt, total_variance)?);
    }

    let trajectory = Trajectory {
        final_state: state,
        collapsed: total_variance < params.collapse_tol,
        steps_taken: steps,
        snapshots,
        seed,
    };
    if trajectory.collapsed {
        Ok(trajectory)
    } else {
        Err(Error::NoCollapse {
            trajectory: Box::new(trajectory),
        })
    }
}

/// The energy eigenvalue nearest to `⟨Ĥ⟩`, provided `Var(Ĥ) < tol`.
pub fn classify_energy(state: &StateVector, tol: f64) -> Result<EnergyLevel> {
    let h = qstate::hamiltonian();
    let variance = qstate::variance(state, &h)?;
    if variance.is_nan() || variance >= tol {
        return Err(Error::NotCollapsed {
            variance,
            tolerance: tol,
        });
    }
    Ok(EnergyLevel::nearest(qstate::expectation(state, &h)?))
}

/// Snapshot quantity aggregated by [`martingale_statistics`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SnapshotQuantity {
    MeanEnergy,
    EnergyVariance,
    GeneratorVariance,
}

impl SnapshotQuantity {
    fn of(self, s: &Snapshot) -> f64 {
        match self {
            SnapshotQuantity::MeanEnergy => s.energy,
            SnapshotQuantity::EnergyVariance => s.energy_variance,
            SnapshotQuantity::GeneratorVariance => s.generator_variance,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SeriesPoint {
    pub time: f64,
    pub estimate: Estimate,
}

/// Ensemble mean and standard error of `quantity` at each snapshot.
pub fn martingale_statistics(
    trajectories: &[Trajectory],
    quantity: SnapshotQuantity,
) -> Result<Vec<SeriesPoint>> {
    let first = trajectories.first().ok_or(Error::EmptyEnsemble)?;
    let times: Vec<f64> = first.snapshots.iter().map(|s| s.time).collect();
    for t in trajectories {
        if t.snapshots.len() != times.len()
            || t.snapshots
                .iter()
                .zip(&times)
                .any(|(s, &time)| s.time != time)
        {
            return Err(Error::ScheduleMismatch);
        }
    }
    Ok(times
        .iter()
        .enumerate()
        .map(|(j, &time)| SeriesPoint {
            time,
            estimate: Estimate::from_samples(
                trajectories
                    .iter()
                    .map(move |t| quantity.of(&t.snapshots[j])),
            )
            .expect("nonempty ensemble"),
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qstate::{initial_state, singlet, DOWN_DOWN, UP_UP};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn validation_examples() {
        assert!(validate_model(&model_energy(1.0)).is_ok());
        assert!(validate_model(&model_local_spins(1.0)).is_ok());
        let bad = ReductionModel::new(
            vec![qstate::s_squared(), qstate::sigma_1z()],
            vec![1.0, 1.0],
        );
        match validate_model(&bad) {
            Err(Error::NonCommuting {
                first,
                second,
                norm,
            }) => {
                assert_eq!(first, "generator 0");
                assert_eq!(second, "generator 1");
                assert_eq!(norm, 2.0);
            }
            other => panic!("unexpected {other:?}"),
        }
        let empty = ReductionModel::new(vec![], vec![]);
        assert!(matches!(validate_model(&empty), Err(Error::EmptyModel)));
        let zero = ReductionModel::new(vec![qstate::hamiltonian()], vec![0.0]);
        assert!(matches!(validate_model(&zero), Err(Error::Coupling { .. })));
        let count = ReductionModel::new(vec![qstate::hamiltonian()], vec![1.0, 1.0]);
        assert!(matches!(
            validate_model(&count),
            Err(Error::CouplingCount { .. })
        ));
    }

    #[test]
    fn local_spin_generators_commute_with_energy() {
        let h = qstate::hamiltonian();
        for a in &model_local_spins(1.0).generators {
            assert_eq!(qstate::commutator_norm(a, &h), 0.0);
        }
    }

    #[test]
    fn drift_on_eigenstates() {
        let m = model_energy(1.0);
        let up = StateVector::basis(UP_UP);
        let d = drift(&up, &m).unwrap();
        assert_eq!(
            d,
            Vector4::new(c(0.0, -1.0), c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0))
        );
        assert!(drift(&singlet(), &m).unwrap().norm() < 1e-15);
    }

    #[test]
    fn drift_on_initial_state() {
        // By hand: Ĥψ = (½,0,0,−½), Ĥ²ψ = (½,0,0,½), ⟨Ĥ⟩ = 0.
        let d = drift(&initial_state(), &model_energy(1.0)).unwrap();
        let expected = Vector4::new(c(-0.0625, -0.5), c(0.0, 0.0), c(0.0, 0.0), c(-0.0625, 0.5));
        assert!((d - expected).norm() < 1e-15);
    }

    #[test]
    fn diffusion_examples() {
        let m = model_energy(1.0);
        let d = diffusion(&initial_state(), &m, 0).unwrap();
        let expected = Vector4::new(c(0.25, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(-0.25, 0.0));
        assert!((d - expected).norm() < 1e-15);
        assert_eq!(
            diffusion(&StateVector::basis(DOWN_DOWN), &m, 0)
                .unwrap()
                .norm(),
            0.0
        );
        assert!(matches!(
            diffusion(&initial_state(), &m, 1),
            Err(Error::Index { .. })
        ));

        let spins = model_local_spins(1.3);
        for k in 0..2 {
            let d = diffusion(&initial_state(), &spins, k).unwrap();
            assert!(initial_state().amplitudes().dotc(&d).norm() < 1e-15);
        }
    }

    #[test]
    fn eigenstate_step_only_rotates_phase() {
        let m = model_energy(1.0);
        let down = StateVector::basis(DOWN_DOWN);
        let dt = 1e-3;
        let next = step(&down, &m, dt, &[0.37]).unwrap();
        assert!((next.populations()[DOWN_DOWN] - 1.0).abs() < 1e-12);
        let phase = Complex64::from_polar(1.0, dt);
        assert!((next.amplitude(DOWN_DOWN) - phase).norm() < dt * dt);
    }

    #[test]
    fn zero_step_is_identity() {
        let m = model_local_spins(1.0);
        let next = step(&initial_state(), &m, 0.0, &[0.0, 0.0]).unwrap();
        assert_eq!(next, initial_state());
    }

    #[test]
    fn oversized_step_is_rejected() {
        let m = model_energy(1.0);
        assert!(matches!(
            step(&initial_state(), &m, 1e-3, &[10.0]),
            Err(Error::Step { .. })
        ));
        assert!(matches!(
            step(&initial_state(), &m, 1e-3, &[]),
            Err(Error::NoiseLength { .. })
        ));
    }

    #[test]
    fn snapshot_schedule() {
        let p = SimulationParams {
            max_steps: 100,
            snapshot_count: 5,
            ..Default::default()
        };
        assert_eq!(p.snapshot_steps(), vec![0, 25, 50, 75, 100]);
        let p = SimulationParams {
            snapshot_count: 3,
            snapshot_span: Some(10),
            ..p
        };
        assert_eq!(p.snapshot_steps(), vec![0, 5, 10]);
        let p = SimulationParams {
            snapshot_count: 0,
            ..p
        };
        assert!(p.snapshot_steps().is_empty());
    }

    #[test]
    fn params_validation() {
        assert!(SimulationParams::default().validate().is_ok());
        for bad in [
            SimulationParams {
                dt: 0.0,
                ..Default::default()
            },
            SimulationParams {
                collapse_tol: -1.0,
                ..Default::default()
            },
            SimulationParams {
                max_steps: 0,
                ..Default::default()
            },
        ] {
            assert!(matches!(bad.validate(), Err(Error::Params(_))));
        }
    }

    #[test]
    fn eigenstate_trajectory_collapses_immediately() {
        let t = run_trajectory(
            &StateVector::basis(UP_UP),
            &model_energy(1.0),
            &SimulationParams::default(),
            1,
        )
        .unwrap();
        assert!(t.collapsed);
        assert_eq!(t.steps_taken, 0);
        assert!((t.final_state.fidelity(&StateVector::basis(UP_UP)) - 1.0).abs() < 1e-10);
        assert_eq!(t.snapshots.len(), 50);
        assert!(t.snapshots.iter().all(|s| s.energy == 1.0));
    }

    #[test]
    fn no_collapse_is_reported() {
        let params = SimulationParams {
            max_steps: 10,
            ..Default::default()
        };
        match run_trajectory(&initial_state(), &model_energy(1.0), &params, 5) {
            Err(Error::NoCollapse { trajectory }) => {
                assert!(!trajectory.collapsed);
                assert_eq!(trajectory.steps_taken, 10);
                assert_eq!(trajectory.seed, 5);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn trajectory_reaches_an_eigenvalue() {
        let t = run_trajectory(
            &initial_state(),
            &model_energy(1.0),
            &SimulationParams::default(),
            11,
        )
        .unwrap();
        let e = qstate::expectation(&t.final_state, &qstate::hamiltonian()).unwrap();
        assert!([1.0, 0.0, -1.0].iter().any(|v| (e - v).abs() < 1e-5), "{e}");
        let again = run_trajectory(
            &initial_state(),
            &model_energy(1.0),
            &SimulationParams::default(),
            11,
        )
        .unwrap();
        assert_eq!(t, again);
    }

    #[test]
    fn classification() {
        assert_eq!(
            classify_energy(&StateVector::basis(UP_UP), 1e-10).unwrap(),
            EnergyLevel::Plus
        );
        assert_eq!(
            classify_energy(&singlet(), 1e-10).unwrap(),
            EnergyLevel::Zero
        );
        assert!(matches!(
            classify_energy(&initial_state(), 1e-10),
            Err(Error::NotCollapsed { .. })
        ));
    }

    #[test]
    fn schedule_mismatch_detected() {
        let params = SimulationParams {
            snapshot_count: 3,
            snapshot_span: Some(4),
            ..Default::default()
        };
        let a = run_trajectory(&StateVector::basis(UP_UP), &model_energy(1.0), &params, 0).unwrap();
        let mut b = a.clone();
        b.snapshots.pop();
        assert!(matches!(
            martingale_statistics(&[a.clone(), b], SnapshotQuantity::MeanEnergy),
            Err(Error::ScheduleMismatch)
        ));
        assert!(matches!(
            martingale_statistics(&[], SnapshotQuantity::MeanEnergy),
            Err(Error::EmptyEnsemble)
        ));
        let series = martingale_statistics(&[a], SnapshotQuantity::EnergyVariance).unwrap();
        assert_eq!(series.len(), 3);
        assert_eq!(series[1].time, 2e-3);
    }
}
