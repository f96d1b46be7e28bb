use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::analysis::default_grid;
use crate::cfm::TrainConfig;
use crate::data::DatasetSpec;
use crate::error::{io_err, Error, Result};
use crate::nn::MlpConfig;
use crate::ode::SolverSpec;

pub const RUN_CONFIG_FORMAT_VERSION: u32 = 1;

/// Environment variable that overrides the configured seed.
pub const SEED_ENV: &str = "FMSOLVE_SEED";

fn default_grid_serde() -> Vec<SolverSpec> {
    default_grid()
}

/// Training hyperparameters; the network's input width follows the dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainSection {
    pub epochs: usize,
    pub batch_size: usize,
    pub lr: f64,
    pub hidden: usize,
    pub n_blocks: usize,
    pub time_embed_dim: usize,
}

impl Default for TrainSection {
    fn default() -> Self {
        let t = TrainConfig::default();
        Self {
            epochs: t.epochs,
            batch_size: t.batch_size,
            lr: t.lr,
            hidden: t.mlp.hidden,
            n_blocks: t.mlp.n_blocks,
            time_embed_dim: t.mlp.time_embed_dim,
        }
    }
}

/// Everything a run can be configured with. Every field except
/// `format_version` is optional; unknown keys are rejected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub format_version: u32,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub dataset: DatasetSpec,
    #[serde(default)]
    pub train: TrainSection,
    #[serde(default = "default_grid_serde")]
    pub solver_grid: Vec<SolverSpec>,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            format_version: RUN_CONFIG_FORMAT_VERSION,
            seed: 0,
            dataset: DatasetSpec::default(),
            train: TrainSection::default(),
            solver_grid: default_grid(),
            output_dir: None,
        }
    }
}

impl RunConfig {
    pub fn from_json(s: &str) -> Result<Self> {
        let cfg: RunConfig = serde_json::from_str(s).map_err(|e| Error::Config(e.to_string()))?;
        if cfg.format_version != RUN_CONFIG_FORMAT_VERSION {
            return Err(Error::Config(format!(
                "unsupported format_version {} (expected {RUN_CONFIG_FORMAT_VERSION})",
                cfg.format_version
            )));
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let s = std::fs::read_to_string(path).map_err(io_err(path))?;
        Self::from_json(&s).map_err(|e| e.context(format!("reading {}", path.display())))
    }

    pub fn validate(&self) -> Result<()> {
        self.train_config().validate().map_err(|e| Error::Config(e.to_string()))?;
        for s in &self.solver_grid {
            s.validate().map_err(|e| Error::Config(format!("solver_grid entry {s}: {e}")))?;
        }
        Ok(())
    }

    pub fn train_config(&self) -> TrainConfig {
        let t = &self.train;
        TrainConfig {
            epochs: t.epochs,
            batch_size: t.batch_size,
            lr: t.lr,
            dataset: self.dataset.clone(),
            mlp: MlpConfig {
                data_dim: self.dataset.dim(),
                hidden: t.hidden,
                n_blocks: t.n_blocks,
                time_embed_dim: t.time_embed_dim,
            },
            seed: self.seed,
        }
    }
}

/// Seed precedence: command-line flag, then `FMSOLVE_SEED`, then the config.
pub fn resolve_seed(flag: Option<u64>, env: Option<&str>, config: u64) -> Result<u64> {
    if let Some(s) = flag {
        return Ok(s);
    }
    match env {
        Some(v) => v.trim().parse().map_err(|_| Error::Config(format!("{SEED_ENV} must be an unsigned integer, got {v:?}"))),
        None => Ok(config),
    }
}
