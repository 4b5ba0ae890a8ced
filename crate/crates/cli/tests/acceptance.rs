//! End-to-end acceptance checks. Runs as a plain binary and prints one
//! PASS/FAIL line per criterion; exits non-zero if any fails.

use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2, PI, TAU};
use std::fs;
use std::process::{Command, ExitCode};
use std::time::Instant;

use collapse_lab::experiment::{
    conservation_check, estimate_p, run_ensemble, run_ensemble_serial, run_trajectories, Ensemble,
    EnsembleReport,
};
use collapse_lab::qstate::{
    expectation, initial_state, s_squared, sigma_1z, singlet, theta_phi_state, triplet_zero,
    EnergyLevel, SphereCoordinates, StateVector, DOWN_DOWN, UP_UP,
};
use collapse_lab::reduction::{
    martingale_statistics, model_energy, model_local_spins, ReductionModel, SimulationParams,
    SnapshotQuantity,
};
use collapse_lab::stats::binomial_se;
use num_complex::Complex64;
use tempfile::TempDir;

const N_ENSEMBLE: usize = 10_000;
const N_MARTINGALE: usize = 1_000;
const MARTINGALE_SPAN: u64 = 20_000;
const SEED_ENERGY: u64 = 1;
const SEED_SPINS: u64 = 2;
const SEED_MARTINGALE: u64 = 3;
const SEED_DETERMINISM: u64 = 7;

struct Outcome {
    pass: bool,
    detail: String,
}

fn check(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn timed<T>(label: &str, f: impl FnOnce() -> T) -> T {
    let start = Instant::now();
    let value = f();
    eprintln!("  [{label}: {:.1} s]", start.elapsed().as_secs_f64());
    value
}

fn ensemble(model: &ReductionModel, params: &SimulationParams, seed: u64) -> Ensemble {
    run_ensemble(model, N_ENSEMBLE, params, seed).expect("ensemble runs")
}

fn born_frequencies(report: &EnsembleReport) -> Outcome {
    let targets = [
        (EnergyLevel::Plus, 0.25, 0.013),
        (EnergyLevel::Zero, 0.5, 0.015),
        (EnergyLevel::Minus, 0.25, 0.013),
    ];
    let mut pass = report.n_failed == 0;
    let mut parts = Vec::new();
    for (level, target, tol) in targets {
        let f = report.frequency(level).frequency;
        pass &= (f - target).abs() <= tol;
        parts.push(format!(
            "{}: {f:.4} (target {target} ± {tol})",
            level.label()
        ));
    }
    parts.push(format!("failed {}", report.n_failed));
    check(pass, parts.join(", "))
}

fn energy_model_singlet(ens: &Ensemble, report: &EnsembleReport) -> Outcome {
    let s = singlet();
    let worst = ens
        .degenerate()
        .map(|r| {
            let zero = r
                .final_state
                .project_onto(EnergyLevel::Zero.eigenspace(), 0.0)
                .1
                .expect("energy-zero record has a degenerate component");
            1.0 - zero.fidelity(&s)
        })
        .fold(0.0, f64::max);
    let s2 = report.s2.map_or(f64::NAN, |e| e.mean);
    check(
        report.n_degenerate > 0 && worst < 1e-6 && s2.abs() < 1e-3,
        format!(
            "{} energy-zero outcomes, max 1 - fidelity {worst:.2e} (< 1e-6), <S^2> {s2:.2e} (< 1e-3)",
            report.n_degenerate
        ),
    )
}

fn local_spins_poles(ens: &Ensemble, report: &EnsembleReport) -> Outcome {
    let s2 = report.s2.map_or(f64::NAN, |e| e.mean);
    let thetas: Vec<f64> = ens
        .degenerate()
        .filter_map(|r| r.sphere)
        .map(|s| s.theta)
        .collect();
    let n = thetas.len();
    let north = thetas.iter().filter(|&&t| t < FRAC_PI_2).count();
    let off_pole = thetas.iter().map(|&t| t.min(PI - t)).fold(0.0, f64::max);
    let frac = north as f64 / n.max(1) as f64;
    let band = 3.0 * binomial_se(0.5, n);
    check(
        n > 0 && (s2 - 1.0).abs() <= 1e-3 && (frac - 0.5).abs() <= band,
        format!(
            "<S^2> {s2:.6} (1 ± 1e-3), theta≈0: {north}, theta≈pi: {}, fraction {frac:.4} (0.5 ± {band:.4}), max distance from pole {off_pole:.1e}",
            n - north
        ),
    )
}

fn p_estimate(energy: &Ensemble, spins: &Ensemble) -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for (name, ens) in [("energy", energy), ("local-spins", spins)] {
        match estimate_p(&ens.records) {
            Ok(p) => {
                // Band of the ↑↓/↓↑ measurement on the selected sub-ensemble.
                let band = 3.0 * binomial_se(0.5, p.n).max(p.se);
                pass &= (p.mean - 0.5).abs() <= band;
                parts.push(format!(
                    "{name}: {:.4} ± {:.4} (0.5 ± {band:.4}, n {})",
                    p.mean, p.se, p.n
                ));
            }
            Err(e) => {
                pass = false;
                parts.push(format!("{name}: {e}"));
            }
        }
    }
    check(pass, parts.join("; "))
}

fn conservation(energy: &Ensemble, spins: &Ensemble) -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for (name, ens) in [("energy", energy), ("local-spins", spins)] {
        let c = conservation_check(&ens.records).expect("nonempty ensemble");
        pass &= c.mean.abs() <= 3.0 * c.se;
        parts.push(format!("{name}: {:+.4} (|.| ≤ {:.4})", c.mean, 3.0 * c.se));
    }
    check(pass, parts.join("; "))
}

fn martingale() -> Outcome {
    let params = SimulationParams {
        snapshot_span: Some(MARTINGALE_SPAN),
        ..SimulationParams::default()
    };
    let mut pass = true;
    let mut parts = Vec::new();
    for (name, model) in [
        ("energy", model_energy(1.0)),
        ("local-spins", model_local_spins(1.0)),
    ] {
        let trajectories = timed(&format!("martingale {name}"), || {
            run_trajectories(
                &initial_state(),
                &model,
                N_MARTINGALE,
                &params,
                SEED_MARTINGALE,
            )
            .expect("trajectories run")
        });
        let energy = martingale_statistics(&trajectories, SnapshotQuantity::MeanEnergy).unwrap();
        let variance =
            martingale_statistics(&trajectories, SnapshotQuantity::EnergyVariance).unwrap();

        let worst_z = energy
            .iter()
            .map(|p| {
                if p.estimate.se > 0.0 {
                    p.estimate.mean.abs() / p.estimate.se
                } else {
                    0.0
                }
            })
            .fold(0.0, f64::max);
        let mean_ok = energy
            .iter()
            .all(|p| p.estimate.mean.abs() <= 4.0 * p.estimate.se);
        let rises = variance
            .windows(2)
            .filter(|w| {
                let (a, b) = (w[0].estimate, w[1].estimate);
                b.mean - a.mean > 2.0 * (a.se * a.se + b.se * b.se).sqrt()
            })
            .count();
        let start = variance[0].estimate.mean;
        pass &= mean_ok && rises == 0 && start == 0.5 && energy.len() == 50;
        parts.push(format!(
            "{name}: max |mean E|/se {worst_z:.2} (≤ 4), variance {start} -> {:.2e} with {rises} rises",
            variance.last().unwrap().estimate.mean
        ));
    }
    check(pass, parts.join("; "))
}

fn identities() -> Outcome {
    let mut worst = [0.0f64; 3];
    let (t, s) = (triplet_zero(), singlet());
    for i in 0..40 {
        for j in 0..40 {
            let theta = PI * i as f64 / 39.0;
            let phi = TAU * j as f64 / 40.0;
            let c = SphereCoordinates::new(theta, phi).unwrap();
            let psi = theta_phi_state(c);
            let (ch, sh) = ((0.5 * theta).cos(), (0.5 * theta).sin());

            let sz = expectation(&psi, &sigma_1z()).unwrap();
            worst[0] = worst[0].max((sz - (2.0 * ch * ch - 1.0)).abs());

            let s2 = expectation(&psi, &s_squared()).unwrap();
            worst[1] = worst[1].max((s2 - (1.0 + theta.sin() * phi.cos())).abs());

            let e = Complex64::from_polar(1.0, phi);
            let expanded = t.amplitudes() * ((ch + sh * e) * FRAC_1_SQRT_2)
                + s.amplitudes() * ((ch - sh * e) * FRAC_1_SQRT_2);
            worst[2] = worst[2].max((psi.amplitudes() - expanded).norm());
        }
    }
    let up = expectation(&StateVector::basis(UP_UP), &sigma_1z()).unwrap();
    let down = expectation(&StateVector::basis(DOWN_DOWN), &sigma_1z()).unwrap();
    let cancel = (0.25 * up + 0.25 * down).abs();
    check(
        worst.iter().all(|&w| w < 1e-12) && cancel < 1e-12,
        format!(
            "max error: Sigma_1z {:.1e}, S^2 {:.1e}, triplet/singlet {:.1e}, end-state cancellation {cancel:.1e} (all < 1e-12)",
            worst[0], worst[1], worst[2]
        ),
    )
}

fn time_step(coarse: &EnsembleReport, fine: &EnsembleReport) -> Outcome {
    let mut pass = fine.n_failed == 0;
    let mut parts = Vec::new();
    for level in EnergyLevel::ALL {
        let (a, b) = (coarse.frequency(level), fine.frequency(level));
        let bound = 3.0 * (a.se * a.se + b.se * b.se).sqrt();
        let diff = (a.frequency - b.frequency).abs();
        pass &= diff < bound;
        parts.push(format!(
            "{}: {:.4} -> {:.4} (|Δ| {diff:.4} < {bound:.4})",
            level.label(),
            a.frequency,
            b.frequency
        ));
    }
    check(pass, parts.join(", "))
}

fn determinism() -> Outcome {
    let run = || {
        let dir = TempDir::new().unwrap();
        let status = Command::new(env!("CARGO_BIN_EXE_collapse-lab"))
            .args(["discriminate", "--model", "energy", "--n", "1000", "--seed"])
            .arg(SEED_DETERMINISM.to_string())
            .arg("--out-dir")
            .arg(dir.path())
            .env_remove("COLLAPSE_LAB_WORKERS")
            .output()
            .expect("binary runs")
            .status;
        let read = |f: &str| fs::read(dir.path().join(f)).unwrap_or_default();
        (status.code(), read("report.json"), read("records.csv"))
    };
    let first = timed("cli run 1", run);
    let second = timed("cli run 2", run);
    let cli_ok =
        first.0 == Some(0) && first == second && !first.1.is_empty() && !first.2.is_empty();

    let model = model_energy(1.0);
    let params = SimulationParams::default();
    let serial = timed("serial", || {
        run_ensemble_serial(&model, 1000, &params, SEED_DETERMINISM).unwrap()
    });
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(4)
        .build()
        .unwrap();
    let parallel = timed("parallel", || {
        pool.install(|| run_ensemble(&model, 1000, &params, SEED_DETERMINISM).unwrap())
    });
    let records_ok = serial.records == parallel.records && serial.failures == parallel.failures;
    check(
        cli_ok && records_ok,
        format!(
            "cli outputs identical: {cli_ok} ({} + {} bytes), serial == parallel (4 threads): {records_ok}",
            first.1.len(),
            first.2.len()
        ),
    )
}

fn main() -> ExitCode {
    let energy_model = model_energy(1.0);
    let spins_model = model_local_spins(1.0);
    let params = SimulationParams::default();
    let half_dt = SimulationParams {
        dt: params.dt / 2.0,
        ..params
    };

    let energy = timed("energy ensemble", || {
        ensemble(&energy_model, &params, SEED_ENERGY)
    });
    let energy_report = EnsembleReport::from_ensemble(&energy);
    let spins = timed("local-spins ensemble", || {
        ensemble(&spins_model, &params, SEED_SPINS)
    });
    let spins_report = EnsembleReport::from_ensemble(&spins);
    let energy_fine = timed("energy ensemble at dt/2", || {
        ensemble(&energy_model, &half_dt, SEED_ENERGY)
    });
    let fine_report = EnsembleReport::from_ensemble(&energy_fine);

    let results = [
        (
            "1 energy-model outcome frequencies",
            born_frequencies(&energy_report),
        ),
        (
            "2 energy-zero outcomes are the singlet",
            energy_model_singlet(&energy, &energy_report),
        ),
        (
            "3 local-spins outcomes sit at the poles",
            local_spins_poles(&spins, &spins_report),
        ),
        ("4 p estimate for both models", p_estimate(&energy, &spins)),
        (
            "5 weak conservation of Sigma_1z",
            conservation(&energy, &spins),
        ),
        ("6 energy martingale and variance decay", martingale()),
        ("7 sphere identities on a 40x40 grid", identities()),
        (
            "8 frequencies stable under dt/2",
            time_step(&energy_report, &fine_report),
        ),
        ("9 deterministic outputs", determinism()),
    ];

    let mut all = true;
    for (name, outcome) in &results {
        all &= outcome.pass;
        println!(
            "{} criterion {name}: {}",
            if outcome.pass { "PASS" } else { "FAIL" },
            outcome.detail
        );
    }
    println!(
        "acceptance: {}/{} criteria passed",
        results.iter().filter(|(_, o)| o.pass).count(),
        results.len()
    );
    if all {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
