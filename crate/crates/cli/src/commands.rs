use clap::Args;
use collapse_lab::experiment::{
    luders_reference, run_ensemble, run_trajectories, sphere_histogram, Ensemble, EnsembleReport,
};
use collapse_lab::qstate::{self, EnergyLevel};
use collapse_lab::reduction::{martingale_statistics, SnapshotQuantity};

use crate::config::RunConfig;
use crate::output::{
    self, histogram_csv, martingale_csv, records_csv, to_json, write_atomic, ReportJson,
};
use crate::{CliError, RunSummary};

pub const DEFAULT_ENSEMBLE: usize = 10_000;
pub const DEFAULT_MARTINGALE_ENSEMBLE: usize = 1_000;

#[derive(Clone, Debug, Args)]
pub struct MartingaleArgs {
    #[command(flatten)]
    pub config: RunConfig,

    /// Number of steps covered by the snapshot schedule.
    #[arg(long, default_value_t = 20_000)]
    pub snapshot_span: u64,
}

#[derive(Clone, Debug, Args)]
pub struct HistogramArgs {
    #[command(flatten)]
    pub config: RunConfig,

    /// Bins in cos θ.
    #[arg(long, default_value_t = 20)]
    pub z_bins: usize,

    /// Bins in φ.
    #[arg(long, default_value_t = 36)]
    pub phi_bins: usize,
}

fn with_workers<T: Send>(
    workers: usize,
    job: impl FnOnce() -> Result<T, CliError> + Send,
) -> Result<T, CliError> {
    if workers == 0 {
        return job();
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| CliError::Config(format!("cannot start {workers} workers: {e}")))?;
    pool.install(job)
}

fn ensemble(config: &RunConfig, n: usize) -> Result<Ensemble, CliError> {
    let model = config.model()?;
    let params = config.params(None);
    with_workers(config.workers, || {
        Ok(run_ensemble(&model, n, &params, config.seed)?)
    })
}

pub fn cmd_discriminate(config: &RunConfig) -> Result<RunSummary, CliError> {
    let n = config.validate(DEFAULT_ENSEMBLE)?;
    let ensemble = ensemble(config, n)?;
    let report = EnsembleReport::from_ensemble(&ensemble);
    let json = ReportJson::new(
        config.echo(n),
        &report,
        luders_reference(&qstate::initial_state()),
    );

    write_atomic(&config.out_dir, output::REPORT_FILE, &to_json(&json))?;
    write_atomic(
        &config.out_dir,
        output::RECORDS_FILE,
        &records_csv(&ensemble.records)?,
    )?;
    print_summary(&json);
    Ok(RunSummary {
        failed: report.n_failed,
    })
}

fn opt(x: Option<f64>) -> String {
    x.map_or_else(|| "n/a".into(), |v| format!("{v:.6}"))
}

fn print_summary(r: &ReportJson) {
    let luders = &r.luders_reference;
    println!(
        "{:>8}  {:>8}  {:>10}  {:>10}  {:>10}",
        "energy", "count", "frequency", "se", "projection"
    );
    let rows = [
        (EnergyLevel::Plus, &r.frequencies.plus),
        (EnergyLevel::Zero, &r.frequencies.zero),
        (EnergyLevel::Minus, &r.frequencies.minus),
    ];
    for (level, f) in rows {
        println!(
            "{:>8}  {:>8}  {:>10.6}  {:>10.6}  {:>10.6}",
            level.label(),
            f.count,
            f.frequency,
            f.se,
            luders.table.probability(level)
        );
    }
    println!();
    println!(
        "{:<16}  {:>10}  {:>10}  {:>10}",
        "statistic", "estimate", "se", "projection"
    );
    println!(
        "{:<16}  {:>10}  {:>10}  {:>10}",
        "p",
        opt(r.p_hat),
        opt(r.p_hat_se),
        opt(luders.p)
    );
    println!(
        "{:<16}  {:>10}  {:>10}  {:>10}",
        "<Sigma_1z>",
        opt(r.conservation),
        opt(r.conservation_se),
        opt(Some(luders.conservation))
    );
    println!(
        "{:<16}  {:>10}  {:>10}  {:>10}",
        "<S^2> (E=0)",
        opt(r.s2),
        opt(r.s2_se),
        opt(luders.s2)
    );
    println!();
    println!(
        "trajectories: {} collapsed, {} with energy 0, {} failed",
        r.n_total, r.n_degenerate, r.n_failed
    );
}

pub fn cmd_martingale(args: &MartingaleArgs) -> Result<RunSummary, CliError> {
    let config = &args.config;
    let n = config.validate(DEFAULT_MARTINGALE_ENSEMBLE)?;
    if args.snapshot_span == 0 || config.snapshots < 2 {
        return Err(CliError::Config(
            "--snapshot-span must be positive and --snapshots at least 2".into(),
        ));
    }
    let model = config.model()?;
    let params = config.params(Some(args.snapshot_span));
    let trajectories = with_workers(config.workers, || {
        Ok(run_trajectories(
            &qstate::initial_state(),
            &model,
            n,
            &params,
            config.seed,
        )?)
    })?;
    let energy = martingale_statistics(&trajectories, SnapshotQuantity::MeanEnergy)?;
    let variance = martingale_statistics(&trajectories, SnapshotQuantity::EnergyVariance)?;
    write_atomic(
        &config.out_dir,
        output::MARTINGALE_FILE,
        &martingale_csv(&energy, &variance)?,
    )?;

    let worst = energy
        .iter()
        .map(|p| p.estimate.z_score(0.0))
        .fold(0.0, f64::max);
    println!(
        "{} snapshots over t = [0, {}]",
        energy.len(),
        energy.last().map_or(0.0, |p| p.time)
    );
    println!("largest |mean energy| / se: {worst:.3}");
    if let (Some(first), Some(last)) = (variance.first(), variance.last()) {
        println!(
            "mean energy variance: {:.6} -> {:.6}",
            first.estimate.mean, last.estimate.mean
        );
    }
    Ok(RunSummary {
        failed: trajectories.iter().filter(|t| !t.collapsed).count(),
    })
}

pub fn cmd_histogram(args: &HistogramArgs) -> Result<RunSummary, CliError> {
    let config = &args.config;
    let n = config.validate(DEFAULT_ENSEMBLE)?;
    if args.z_bins == 0 || args.phi_bins == 0 {
        return Err(CliError::Config(
            "--z-bins and --phi-bins must be at least 1".into(),
        ));
    }
    let ensemble = ensemble(config, n)?;
    let hist = sphere_histogram(&ensemble.records, args.z_bins, args.phi_bins).map_err(|e| {
        CliError::Collapse(format!("{e}; {} trajectories failed", ensemble.n_failed()))
    })?;
    write_atomic(
        &config.out_dir,
        output::HISTOGRAM_FILE,
        &histogram_csv(&hist)?,
    )?;
    println!(
        "{} energy-zero outcomes in {} of {} bins",
        hist.total_count,
        hist.occupied().count(),
        hist.counts.len()
    );
    for b in hist.occupied() {
        println!(
            "  cos θ [{:+.3}, {:+.3})  φ [{:.3}, {:.3})  {}",
            b.z_low, b.z_high, b.phi_low, b.phi_high, b.count
        );
    }
    Ok(RunSummary {
        failed: ensemble.n_failed(),
    })
}
