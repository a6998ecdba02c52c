//! Config file loading, flag overrides, and output directory resolution.
//!
//! Precedence: command-line flags, then the config file, then built-in
//! defaults. Paths inside the file are resolved against the file's own
//! directory; the output directory may also come from `ALMASK_OUT_DIR`.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use almask_core::harness::{DataSource, DatasetSpec};
use almask_core::{ExperimentConfig, ModelSpec, StrategyId, TrainConfig};

use crate::error::{CliError, Result};
use crate::fsio;

pub const OUT_DIR_ENV: &str = "ALMASK_OUT_DIR";

// Defaults mirror the experiment config's own serde defaults.
fn default_sparsity() -> f64 {
    0.002
}

fn default_lambda() -> f64 {
    1.0
}

/// On-disk experiment description. Mirrors the experiment config field for
/// field, plus the strategy list used by `compare` and the output directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CliConfigFile {
    /// Strategy for `run`; ignored by `compare` when `strategies` is set.
    #[serde(default)]
    pub strategy: Option<StrategyId>,
    /// Strategies for `compare`, executed in listed order.
    #[serde(default)]
    pub strategies: Option<Vec<StrategyId>>,
    #[serde(default)]
    pub output_dir: Option<String>,
    pub data: DatasetSpec,
    pub model: ModelSpec,
    #[serde(default)]
    pub train: TrainConfig,
    pub n_initial: usize,
    pub batch_per_round: usize,
    pub budget: usize,
    pub trials: usize,
    pub base_seed: u64,
    #[serde(default = "default_sparsity")]
    pub sparsity: f64,
    #[serde(default = "default_lambda")]
    pub lambda: f64,
}

/// Flat `--key value` flags that supersede config file values.
#[derive(Debug, Clone, Default, clap::Args)]
pub struct Overrides {
    /// Selection strategy: fishermask, bait, entropy, margin, kcenter, random
    #[arg(long)]
    pub strategy: Option<StrategyId>,
    #[arg(long)]
    pub trials: Option<usize>,
    #[arg(long)]
    pub budget: Option<usize>,
    #[arg(long)]
    pub n_initial: Option<usize>,
    #[arg(long)]
    pub batch_per_round: Option<usize>,
    #[arg(long)]
    pub base_seed: Option<u64>,
    #[arg(long)]
    pub sparsity: Option<f64>,
    #[arg(long)]
    pub lambda: Option<f64>,
    /// Training epochs per round
    #[arg(long)]
    pub epochs: Option<usize>,
    /// Where output files go (also settable via ALMASK_OUT_DIR)
    #[arg(long)]
    pub output_dir: Option<PathBuf>,
    /// Max trials running in parallel; default: one per core
    #[arg(long)]
    pub jobs: Option<usize>,
}

/// Load a config file and resolve its data paths against its directory.
pub fn load_config(path: &Path) -> Result<CliConfigFile> {
    let text = fsio::read_to_string(path)?;
    let mut file: CliConfigFile =
        serde_json::from_str(&text).map_err(|e| CliError::format(path, e.to_string()))?;
    let base = path.parent().filter(|p| !p.as_os_str().is_empty());
    if let Some(base) = base {
        resolve_source_paths(&mut file.data.source, base);
    }
    Ok(file)
}

fn resolve_against(base: &Path, raw: &mut String) {
    let p = Path::new(raw.as_str());
    if p.is_relative() {
        *raw = base.join(p).display().to_string();
    }
}

fn resolve_source_paths(source: &mut DataSource, base: &Path) {
    match source {
        DataSource::Synth(_) => {}
        DataSource::Idx(src) => {
            resolve_against(base, &mut src.train_images);
            resolve_against(base, &mut src.train_labels);
            resolve_against(base, &mut src.test_images);
            resolve_against(base, &mut src.test_labels);
        }
        DataSource::Csv(src) => {
            resolve_against(base, &mut src.train);
            resolve_against(base, &mut src.test);
        }
    }
}

impl CliConfigFile {
    /// Fold flag overrides in. Output dir and jobs are handled separately
    /// because they are not part of the experiment itself.
    pub fn apply_overrides(&mut self, ov: &Overrides) {
        if let Some(s) = ov.strategy {
            self.strategy = Some(s);
        }
        if let Some(v) = ov.trials {
            self.trials = v;
        }
        if let Some(v) = ov.budget {
            self.budget = v;
        }
        if let Some(v) = ov.n_initial {
            self.n_initial = v;
        }
        if let Some(v) = ov.batch_per_round {
            self.batch_per_round = v;
        }
        if let Some(v) = ov.base_seed {
            self.base_seed = v;
        }
        if let Some(v) = ov.sparsity {
            self.sparsity = v;
        }
        if let Some(v) = ov.lambda {
            self.lambda = v;
        }
        if let Some(v) = ov.epochs {
            self.train.epochs = v;
        }
    }

    /// The single strategy `run` and `profile` operate on.
    pub fn run_strategy(&self) -> Result<StrategyId> {
        self.strategy
            .ok_or_else(|| CliError::config("no strategy given; set `strategy` or pass --strategy"))
    }

    /// The strategy list `compare` iterates, in order.
    pub fn compare_strategies(&self) -> Result<Vec<StrategyId>> {
        match (&self.strategies, self.strategy) {
            (Some(list), _) if !list.is_empty() => Ok(list.clone()),
            (None, Some(single)) => Ok(vec![single]),
            _ => Err(CliError::config(
                "compare needs a non-empty `strategies` list",
            )),
        }
    }

    /// The exact config the harness runs; embedded verbatim in records.
    pub fn to_experiment_config(&self, strategy: StrategyId) -> ExperimentConfig {
        ExperimentConfig {
            strategy,
            data: self.data.clone(),
            model: self.model.clone(),
            train: self.train.clone(),
            n_initial: self.n_initial,
            batch_per_round: self.batch_per_round,
            budget: self.budget,
            trials: self.trials,
            base_seed: self.base_seed,
            sparsity: self.sparsity,
            lambda: self.lambda,
        }
    }
}

/// Flag beats environment beats file beats the `out` default. The file's
/// value is relative to the config directory; flag and env follow the
/// invoking shell's working directory as usual.
pub fn resolve_output_dir(
    file: &CliConfigFile,
    ov: &Overrides,
    config_path: &Path,
    env_value: Option<&str>,
) -> PathBuf {
    if let Some(dir) = &ov.output_dir {
        return dir.clone();
    }
    if let Some(dir) = env_value {
        return PathBuf::from(dir);
    }
    if let Some(dir) = &file.output_dir {
        let p = Path::new(dir);
        return match config_path.parent().filter(|b| !b.as_os_str().is_empty()) {
            Some(base) if p.is_relative() => base.join(p),
            _ => p.to_path_buf(),
        };
    }
    PathBuf::from("out")
}
