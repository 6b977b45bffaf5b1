//! Run configuration: JSON file, then command-line flags on top.

use std::path::{Path, PathBuf};

use clap::Args;
use serde::{Deserialize, Serialize};

use sbnn::experiment::Trainer;
use sbnn::{BaselineConfig, Schema, TrainConfig};

pub const SEED_ENV: &str = "SBNN_SEED";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub trainer: Trainer,
    pub data_path: Option<PathBuf>,
    pub target_column: String,
    pub hidden: usize,
    pub gamma: f64,
    pub lambda: f64,
    pub epsilon: f64,
    pub max_epochs: usize,
    pub seed: u64,
    pub standardize: bool,
    pub one_hot_region: bool,
    pub lr_switch_as_written: bool,
    pub workers: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            trainer: Trainer::SplitBoost,
            data_path: None,
            target_column: "charges".into(),
            hidden: 10,
            gamma: 0.1,
            lambda: 0.01,
            epsilon: 1e-6,
            max_epochs: 500,
            seed: 0,
            standardize: true,
            one_hot_region: false,
            lr_switch_as_written: true,
            workers: 1,
        }
    }
}

/// Same fields as [`RunConfig`], each optional, so a file can set any subset.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    trainer: Option<Trainer>,
    data_path: Option<PathBuf>,
    target_column: Option<String>,
    hidden: Option<usize>,
    gamma: Option<f64>,
    lambda: Option<f64>,
    epsilon: Option<f64>,
    max_epochs: Option<usize>,
    seed: Option<u64>,
    standardize: Option<bool>,
    one_hot_region: Option<bool>,
    lr_switch_as_written: Option<bool>,
    workers: Option<usize>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct RunArgs {
    /// JSON file with any RunConfig fields; flags given here override it
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Trainer: splitboost or baseline [default: splitboost]
    #[arg(long)]
    pub trainer: Option<Trainer>,
    /// Input CSV (required here or as data_path in the config file)
    #[arg(long = "data", value_name = "FILE")]
    pub data_path: Option<PathBuf>,
    /// Response column; `charges` selects the insurance encoding, anything
    /// else reads every column as numeric [default: charges]
    #[arg(long)]
    pub target_column: Option<String>,
    /// Hidden units [default: 10]
    #[arg(long)]
    pub hidden: Option<usize>,
    /// Learning rate [default: 0.1]
    #[arg(long)]
    pub gamma: Option<f64>,
    /// L2 penalty, baseline only [default: 0.01]
    #[arg(long)]
    pub lambda: Option<f64>,
    /// Early-stopping threshold on the validation cost change [default: 1e-6]
    #[arg(long)]
    pub epsilon: Option<f64>,
    /// Epoch cap [default: 500]
    #[arg(long)]
    pub max_epochs: Option<usize>,
    /// Split and initialization seed; falls back to $SBNN_SEED [default: 0]
    #[arg(long)]
    pub seed: Option<u64>,
    /// Z-score features and target on the training rows [default: true]
    #[arg(long, value_name = "BOOL")]
    pub standardize: Option<bool>,
    /// One-hot encode region instead of an ordinal [default: false]
    #[arg(long, value_name = "BOOL")]
    pub one_hot_region: Option<bool>,
    /// Learning-rate switch as printed (full rate after a cost increase);
    /// false inverts it [default: true]
    #[arg(long, value_name = "BOOL")]
    pub lr_switch_as_written: Option<bool>,
    /// Worker threads for bench [default: 1]
    #[arg(long)]
    pub workers: Option<usize>,
}

impl RunArgs {
    /// Resolves defaults, file and flags. `env_seed` is consulted only when
    /// neither the file nor the flags set a seed.
    pub fn resolve(&self, env_seed: Option<&str>) -> anyhow::Result<RunConfig> {
        let file = match &self.config {
            Some(path) => read_file(path)?,
            None => FileConfig::default(),
        };
        let d = RunConfig::default();
        let seed = match self.seed.or(file.seed) {
            Some(s) => s,
            None => match env_seed {
                Some(v) => v
                    .trim()
                    .parse()
                    .map_err(|_| crate::Usage(format!("{SEED_ENV}=`{v}` is not an unsigned integer")))?,
                None => d.seed,
            },
        };
        Ok(RunConfig {
            trainer: self.trainer.or(file.trainer).unwrap_or(d.trainer),
            data_path: self.data_path.clone().or(file.data_path),
            target_column: self
                .target_column
                .clone()
                .or(file.target_column)
                .unwrap_or(d.target_column),
            hidden: self.hidden.or(file.hidden).unwrap_or(d.hidden),
            gamma: self.gamma.or(file.gamma).unwrap_or(d.gamma),
            lambda: self.lambda.or(file.lambda).unwrap_or(d.lambda),
            epsilon: self.epsilon.or(file.epsilon).unwrap_or(d.epsilon),
            max_epochs: self.max_epochs.or(file.max_epochs).unwrap_or(d.max_epochs),
            seed,
            standardize: self.standardize.or(file.standardize).unwrap_or(d.standardize),
            one_hot_region: self.one_hot_region.or(file.one_hot_region).unwrap_or(d.one_hot_region),
            lr_switch_as_written: self
                .lr_switch_as_written
                .or(file.lr_switch_as_written)
                .unwrap_or(d.lr_switch_as_written),
            workers: self.workers.or(file.workers).unwrap_or(d.workers),
        })
    }
}

fn read_file(path: &Path) -> anyhow::Result<FileConfig> {
    let text =
        std::fs::read_to_string(path).map_err(|e| crate::Usage(format!("cannot open {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| crate::Usage(format!("bad config {}: {e}", path.display())).into())
}

impl RunConfig {
    pub fn schema(&self) -> Schema {
        if self.target_column == "charges" {
            Schema::Insurance {
                one_hot_region: self.one_hot_region,
            }
        } else {
            Schema::Numeric {
                target: self.target_column.clone(),
            }
        }
    }

    pub fn data_path(&self) -> anyhow::Result<&Path> {
        self.data_path
            .as_deref()
            .ok_or_else(|| crate::Usage("no input data: pass --data or set data_path".into()).into())
    }

    pub fn splitboost(&self) -> TrainConfig {
        TrainConfig {
            gamma_star: self.gamma,
            epsilon: self.epsilon,
            max_epochs: self.max_epochs,
            hidden: self.hidden,
            seed: self.seed,
            lr_switch_enabled: true,
            lr_switch_as_written: self.lr_switch_as_written,
        }
    }

    pub fn baseline(&self) -> BaselineConfig {
        BaselineConfig {
            gamma: self.gamma,
            lambda: self.lambda,
            max_epochs: self.max_epochs,
            epsilon: self.epsilon,
            hidden: self.hidden,
            seed: self.seed,
        }
    }

    pub fn validate(&self) -> anyhow::Result<()> {
        self.splitboost().validate()?;
        self.baseline().validate()?;
        if self.workers == 0 {
            return Err(crate::Usage("workers must be >= 1".into()).into());
        }
        Ok(())
    }
}
