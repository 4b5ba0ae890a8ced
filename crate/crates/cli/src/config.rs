use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use collapse_lab::qstate::Observable;
use collapse_lab::reduction::{
    model_energy, model_local_spins, validate_model, ReductionModel, SimulationParams,
    DEFAULT_COUPLING,
};
use nalgebra::Matrix4;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::CliError;

/// Environment variable holding the default number of worker threads.
pub const WORKERS_ENV: &str = "COLLAPSE_LAB_WORKERS";

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelKind {
    /// Reduction driven by the Hamiltonian.
    Energy,
    /// Reduction driven by the z-spin of each particle separately.
    LocalSpins,
    /// Generators and couplings read from `--generators`.
    Custom,
}

/// Flags shared by every subcommand.
#[derive(Clone, Debug, Args)]
pub struct RunConfig {
    #[arg(long, value_enum, default_value = "energy")]
    pub model: ModelKind,

    /// JSON file with generators and couplings (required for `--model custom`).
    #[arg(long = "generators", value_name = "PATH")]
    pub custom_generators: Option<PathBuf>,

    /// Coupling strength of the built-in models.
    #[arg(long, default_value_t = DEFAULT_COUPLING)]
    pub sigma: f64,

    /// Number of trajectories.
    #[arg(long)]
    pub n: Option<usize>,

    #[arg(long, default_value_t = 1e-3)]
    pub dt: f64,

    /// Summed generator variance below which a trajectory counts as collapsed.
    #[arg(long, default_value_t = 1e-10)]
    pub collapse_tol: f64,

    #[arg(long, default_value_t = 10_000_000)]
    pub max_steps: u64,

    #[arg(long, default_value_t = 0)]
    pub seed: u64,

    /// Number of equally spaced diagnostic snapshots per trajectory.
    #[arg(long, default_value_t = 50)]
    pub snapshots: usize,

    /// Directory receiving the output files.
    #[arg(long, default_value = ".")]
    pub out_dir: PathBuf,

    /// Worker threads (0 = one per core).
    #[arg(long, env = WORKERS_ENV, default_value_t = 0)]
    pub workers: usize,
}

/// The part of [`RunConfig`] that determines the results, echoed into the
/// JSON report.
#[derive(Clone, Debug, Serialize)]
pub struct EchoedConfig {
    pub model: ModelKind,
    pub custom_generators: Option<String>,
    pub sigma: f64,
    pub n: usize,
    pub dt: f64,
    pub collapse_tol: f64,
    pub max_steps: u64,
    pub seed: u64,
    pub snapshots: usize,
}

impl RunConfig {
    /// Checks flag values and resolves the trajectory count.
    pub fn validate(&self, default_n: usize) -> Result<usize, CliError> {
        let n = self.n.unwrap_or(default_n);
        if n == 0 {
            return Err(CliError::Config("--n must be at least 1".into()));
        }
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return Err(CliError::Config(format!(
                "--sigma must be positive, got {}",
                self.sigma
            )));
        }
        match (self.model, &self.custom_generators) {
            (ModelKind::Custom, None) => {
                return Err(CliError::Config(
                    "--model custom requires --generators".into(),
                ))
            }
            (ModelKind::Energy | ModelKind::LocalSpins, Some(_)) => {
                return Err(CliError::Config(
                    "--generators is only valid with --model custom".into(),
                ))
            }
            _ => {}
        }
        self.params(None).validate()?;
        Ok(n)
    }

    pub fn params(&self, snapshot_span: Option<u64>) -> SimulationParams {
        SimulationParams {
            dt: self.dt,
            collapse_tol: self.collapse_tol,
            max_steps: self.max_steps,
            snapshot_count: self.snapshots,
            snapshot_span,
        }
    }

    pub fn model(&self) -> Result<ReductionModel, CliError> {
        let model = match self.model {
            ModelKind::Energy => model_energy(self.sigma),
            ModelKind::LocalSpins => model_local_spins(self.sigma),
            ModelKind::Custom => {
                let path = self.custom_generators.as_deref().ok_or_else(|| {
                    CliError::Config("--model custom requires --generators".into())
                })?;
                load_custom_model(path)?
            }
        };
        validate_model(&model)?;
        Ok(model)
    }

    pub fn echo(&self, n: usize) -> EchoedConfig {
        EchoedConfig {
            model: self.model,
            custom_generators: self
                .custom_generators
                .as_ref()
                .map(|p| p.display().to_string()),
            sigma: self.sigma,
            n,
            dt: self.dt,
            collapse_tol: self.collapse_tol,
            max_steps: self.max_steps,
            seed: self.seed,
            snapshots: self.snapshots,
        }
    }
}

/// On-disk form of a custom model: row-major 4×4 matrices of `[re, im]`
/// pairs and one coupling per matrix.
#[derive(Debug, Deserialize, Serialize)]
pub struct CustomModelFile {
    pub generators: Vec<[[[f64; 2]; 4]; 4]>,
    pub couplings: Vec<f64>,
}

impl CustomModelFile {
    pub fn into_model(self) -> Result<ReductionModel, CliError> {
        let generators = self
            .generators
            .iter()
            .enumerate()
            .map(|(k, rows)| {
                let m = Matrix4::from_fn(|i, j| Complex64::new(rows[i][j][0], rows[i][j][1]));
                Observable::new(m).map_err(|e| CliError::Config(format!("generator {k}: {e}")))
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(ReductionModel::new(generators, self.couplings))
    }
}

pub fn load_custom_model(path: &Path) -> Result<ReductionModel, CliError> {
    let text = fs::read_to_string(path)?;
    let file: CustomModelFile = serde_json::from_str(&text)
        .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    file.into_model()
}
