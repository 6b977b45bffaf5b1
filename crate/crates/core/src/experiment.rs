//! Experiment harness: learning-rate and penalty sweeps, paired Monte Carlo
//! comparison of the two trainers, and per-epoch timing.
//!
//! Seed `i` drives the data split and both trainers' initialization, so the
//! two arms always see the same partitions.

use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::baseline::{retrain_baseline, train_baseline, train_baseline_for_epochs, BaselineConfig};
use crate::data::{split, Dataset, Samples, Scaler, SplitIndices};
use crate::error::{Error, Result};
use crate::model::{mse_cost, NetworkParams};
use crate::splitboost::{retrain, train, train_for_epochs, EpochRecord, TrainConfig, TrainResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Trainer {
    SplitBoost,
    Baseline,
}

impl std::str::FromStr for Trainer {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "splitboost" | "split-boost" => Ok(Trainer::SplitBoost),
            "baseline" | "ff" => Ok(Trainer::Baseline),
            other => Err(Error::Config(format!("unknown trainer `{other}`"))),
        }
    }
}

/// One seed's partitions in model units.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub split: SplitIndices,
    pub scaler: Option<Scaler>,
    pub a: Samples,
    pub b: Samples,
    pub val: Samples,
    pub test: Samples,
}

impl Prepared {
    /// Splits with `seed` and, when `standardize` is set, z-scores everything
    /// with statistics from the training rows only.
    pub fn new(dataset: &Dataset, seed: u64, standardize: bool) -> Result<Prepared> {
        let split = split(dataset.n, seed)?;
        let (data, scaler) = if standardize {
            let scaler = Scaler::fit(dataset, &split.train())?;
            (scaler.apply(dataset), Some(scaler))
        } else {
            (dataset.clone(), None)
        };
        Ok(Prepared {
            a: data.samples(&split.train_a),
            b: data.samples(&split.train_b),
            val: data.samples(&split.val),
            test: data.samples(&split.test),
            split,
            scaler,
        })
    }

    pub fn train(&self) -> Result<Samples> {
        self.a.concat(&self.b)
    }

    pub fn train_and_val(&self) -> Result<Samples> {
        self.train()?.concat(&self.val)
    }
}

/// Result of early stopping, retraining on train + validation and scoring on test.
#[derive(Debug, Clone)]
pub struct PipelineOutcome {
    pub best_epoch: usize,
    pub stopped_early: bool,
    pub history: Vec<EpochRecord>,
    /// The retraining run, monitored on the test rows.
    pub retrain_history: Vec<EpochRecord>,
    pub params: NetworkParams,
    pub test_cost: f64,
}

fn finish(search: TrainResult, retrained: TrainResult, test: &Samples) -> Result<PipelineOutcome> {
    let test_cost = mse_cost(&retrained.params.predict(&test.x)?, &test.y)?;
    Ok(PipelineOutcome {
        best_epoch: search.best_epoch,
        stopped_early: search.stopped_early,
        history: search.history,
        retrain_history: retrained.history,
        params: retrained.params,
        test_cost,
    })
}

pub fn splitboost_pipeline(config: &TrainConfig, data: &Prepared) -> Result<PipelineOutcome> {
    let search = train(config, &data.a, &data.b, &data.val)?;
    let retrained = retrain(config, &data.train_and_val()?, search.best_epoch, Some(&data.test))?;
    finish(search, retrained, &data.test)
}

pub fn baseline_pipeline(config: &BaselineConfig, data: &Prepared) -> Result<PipelineOutcome> {
    let search = train_baseline(config, &data.train()?, &data.val)?;
    let retrained = retrain_baseline(config, &data.train_and_val()?, search.best_epoch, Some(&data.test))?;
    finish(search, retrained, &data.test)
}

/// Mean wall time per epoch, dropping the first (warm-up) epoch when more
/// than one was run.
pub fn steady_epoch_time(history: &[EpochRecord]) -> f64 {
    let times: Vec<f64> = history.iter().map(|r| r.wall_time_s).collect();
    let steady = if times.len() > 1 { &times[1..] } else { &times[..] };
    if steady.is_empty() {
        0.0
    } else {
        steady.iter().sum::<f64>() / steady.len() as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SweepParam {
    Gamma,
    Lambda,
}

impl std::str::FromStr for SweepParam {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gamma" => Ok(SweepParam::Gamma),
            "lambda" => Ok(SweepParam::Lambda),
            other => Err(Error::Config(format!("unknown sweep parameter `{other}`"))),
        }
    }
}

pub const DEFAULT_GAMMA_GRID: [f64; 6] = [0.001, 0.005, 0.01, 0.05, 0.1, 0.5];
pub const DEFAULT_LAMBDA_GRID: [f64; 5] = [0.0001, 0.001, 0.01, 0.1, 1.0];

#[derive(Debug, Clone)]
pub struct SweepSpec {
    pub parameter: SweepParam,
    pub values: Vec<f64>,
    pub trainer: Trainer,
    pub splitboost: TrainConfig,
    pub baseline: BaselineConfig,
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        if self.values.is_empty() {
            return Err(Error::Config("sweep needs at least one value".into()));
        }
        if let Some(v) = self.values.iter().find(|v| !(**v > 0.0 && v.is_finite())) {
            return Err(Error::Config(format!("sweep values must be positive, got {v}")));
        }
        if self.parameter == SweepParam::Lambda && self.trainer == Trainer::SplitBoost {
            return Err(Error::Config("split-boost has no lambda to sweep".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepTable {
    /// `(value, final validation cost)`; diverged runs carry NaN.
    pub rows: Vec<(f64, f64)>,
    pub argmin: Option<f64>,
}

impl SweepTable {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("value,final_j_val\n");
        for (v, c) in &self.rows {
            out.push_str(&format!("{v},{c}\n"));
        }
        out
    }
}

/// Lowest finite cost; ties go to the smaller parameter value.
pub fn sweep_argmin(rows: &[(f64, f64)]) -> Option<f64> {
    rows.iter()
        .filter(|(_, c)| c.is_finite())
        .min_by(|x, y| x.1.total_cmp(&y.1).then(x.0.total_cmp(&y.0)))
        .map(|(v, _)| *v)
}

/// One early-stopped training run per candidate value on the split for `seed`.
pub fn run_sweep(spec: &SweepSpec, dataset: &Dataset, seed: u64, standardize: bool) -> Result<SweepTable> {
    spec.validate()?;
    let data = Prepared::new(dataset, seed, standardize)?;
    let train_rows = data.train()?;
    let mut rows = Vec::with_capacity(spec.values.len());
    for &value in &spec.values {
        let run = match spec.trainer {
            Trainer::SplitBoost => {
                let cfg = TrainConfig {
                    gamma_star: value,
                    seed,
                    ..spec.splitboost.clone()
                };
                train(&cfg, &data.a, &data.b, &data.val)
            }
            Trainer::Baseline => {
                let mut cfg = BaselineConfig {
                    seed,
                    ..spec.baseline.clone()
                };
                match spec.parameter {
                    SweepParam::Gamma => cfg.gamma = value,
                    SweepParam::Lambda => cfg.lambda = value,
                }
                train_baseline(&cfg, &train_rows, &data.val)
            }
        };
        let cost = match run {
            Ok(r) => r.history.last().and_then(|h| h.j_val).unwrap_or(f64::NAN),
            Err(Error::Diverged { epoch, .. }) => {
                log::warn!("sweep value {value} diverged at epoch {epoch}");
                f64::NAN
            }
            Err(e) => return Err(e),
        };
        rows.push((value, cost));
    }
    let argmin = sweep_argmin(&rows);
    Ok(SweepTable { rows, argmin })
}

/// Five-number summary with linear interpolation between order statistics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Quartiles {
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
}

pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

impl Quartiles {
    pub fn of(values: &[f64]) -> Quartiles {
        let mut v = values.to_vec();
        v.sort_by(f64::total_cmp);
        Quartiles {
            min: quantile(&v, 0.0),
            q1: quantile(&v, 0.25),
            median: quantile(&v, 0.5),
            q3: quantile(&v, 0.75),
            max: quantile(&v, 1.0),
        }
    }
}

/// Fraction of paired entries where split-boost is strictly better.
pub fn win_rate(sb: &[f64], ff: &[f64]) -> f64 {
    assert_eq!(sb.len(), ff.len());
    if sb.is_empty() {
        return 0.0;
    }
    let wins = sb.iter().zip(ff).filter(|(s, f)| s < f).count();
    wins as f64 / sb.len() as f64
}

/// Per-seed result of both arms.
#[derive(Debug, Clone)]
pub struct SeedOutcome {
    pub seed: u64,
    pub sb_test_cost: f64,
    pub ff_test_cost: f64,
    pub sb_best_epoch: usize,
    pub ff_best_epoch: usize,
    pub sb_epoch_time_s: f64,
    pub ff_epoch_time_s: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BenchmarkReport {
    pub seeds: Vec<u64>,
    pub sb_test_costs: Vec<f64>,
    pub ff_test_costs: Vec<f64>,
    pub win_rate: f64,
    pub sb_best_epochs: Vec<usize>,
    pub ff_best_epochs: Vec<usize>,
    pub sb_quartiles: Quartiles,
    pub ff_quartiles: Quartiles,
    /// Mean steady-state seconds per epoch.
    pub sb_epoch_time_s: f64,
    pub ff_epoch_time_s: f64,
    pub epoch_time_ratio: f64,
    /// Mean best epoch count times mean epoch time.
    pub sb_total_time_s: f64,
    pub ff_total_time_s: f64,
    /// Seeds where either arm diverged; excluded from everything above.
    pub diverged_seeds: Vec<u64>,
}

pub const SEEDS_CSV_HEADER: &str = "seed,sb_test_cost,ff_test_cost,sb_best_epoch,ff_best_epoch";

impl BenchmarkReport {
    fn assemble(outcomes: Vec<SeedOutcome>, diverged_seeds: Vec<u64>) -> BenchmarkReport {
        let mean = |v: &[f64]| {
            if v.is_empty() {
                0.0
            } else {
                v.iter().sum::<f64>() / v.len() as f64
            }
        };
        let seeds: Vec<u64> = outcomes.iter().map(|o| o.seed).collect();
        let sb_test_costs: Vec<f64> = outcomes.iter().map(|o| o.sb_test_cost).collect();
        let ff_test_costs: Vec<f64> = outcomes.iter().map(|o| o.ff_test_cost).collect();
        let sb_best_epochs: Vec<usize> = outcomes.iter().map(|o| o.sb_best_epoch).collect();
        let ff_best_epochs: Vec<usize> = outcomes.iter().map(|o| o.ff_best_epoch).collect();
        let sb_epoch_time_s = mean(&outcomes.iter().map(|o| o.sb_epoch_time_s).collect::<Vec<_>>());
        let ff_epoch_time_s = mean(&outcomes.iter().map(|o| o.ff_epoch_time_s).collect::<Vec<_>>());
        let sb_mean_epochs = mean(&sb_best_epochs.iter().map(|&e| e as f64).collect::<Vec<_>>());
        let ff_mean_epochs = mean(&ff_best_epochs.iter().map(|&e| e as f64).collect::<Vec<_>>());
        BenchmarkReport {
            win_rate: win_rate(&sb_test_costs, &ff_test_costs),
            sb_quartiles: Quartiles::of(&sb_test_costs),
            ff_quartiles: Quartiles::of(&ff_test_costs),
            epoch_time_ratio: if ff_epoch_time_s > 0.0 {
                sb_epoch_time_s / ff_epoch_time_s
            } else {
                f64::NAN
            },
            sb_total_time_s: sb_mean_epochs * sb_epoch_time_s,
            ff_total_time_s: ff_mean_epochs * ff_epoch_time_s,
            seeds,
            sb_test_costs,
            ff_test_costs,
            sb_best_epochs,
            ff_best_epochs,
            sb_epoch_time_s,
            ff_epoch_time_s,
            diverged_seeds,
        }
    }

    /// Per-seed cost columns; contains no timings.
    pub fn seeds_csv(&self) -> String {
        let mut out = String::from(SEEDS_CSV_HEADER);
        out.push('\n');
        for i in 0..self.seeds.len() {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                self.seeds[i],
                self.sb_test_costs[i],
                self.ff_test_costs[i],
                self.sb_best_epochs[i],
                self.ff_best_epochs[i]
            ));
        }
        out
    }

    /// JSON document. Non-finite numbers are written as `null`.
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Runs `per_seed` for seeds `0..n_seeds` on up to `workers` threads and
/// joins the results in seed order. Seeds whose run diverged are set aside.
pub fn run_seeds<F>(n_seeds: usize, workers: usize, per_seed: F) -> Result<BenchmarkReport>
where
    F: Fn(u64) -> Result<SeedOutcome> + Sync,
{
    if n_seeds == 0 {
        return Err(Error::Config("need at least one seed".into()));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))?;
    let results: Vec<(u64, Result<SeedOutcome>)> =
        pool.install(|| (0..n_seeds as u64).into_par_iter().map(|s| (s, per_seed(s))).collect());

    let mut outcomes = Vec::with_capacity(n_seeds);
    let mut diverged = Vec::new();
    for (seed, r) in results {
        match r {
            Ok(o) => outcomes.push(o),
            Err(Error::Diverged { epoch, .. }) => {
                log::warn!("seed {seed} diverged at epoch {epoch}; excluded from the comparison");
                diverged.push(seed);
            }
            Err(e) => return Err(e),
        }
    }
    Ok(BenchmarkReport::assemble(outcomes, diverged))
}

/// Paired comparison over seeds `0..n_seeds`: split, early-stop, retrain on
/// train + validation, score on test, for both trainers.
pub fn run_monte_carlo(
    n_seeds: usize,
    config_sb: &TrainConfig,
    config_ff: &BaselineConfig,
    dataset: &Dataset,
    workers: usize,
    standardize: bool,
) -> Result<BenchmarkReport> {
    run_seeds(n_seeds, workers, |seed| {
        let data = Prepared::new(dataset, seed, standardize)?;
        let sb = splitboost_pipeline(
            &TrainConfig {
                seed,
                ..config_sb.clone()
            },
            &data,
        )?;
        let ff = baseline_pipeline(
            &BaselineConfig {
                seed,
                ..config_ff.clone()
            },
            &data,
        )?;
        Ok(SeedOutcome {
            seed,
            sb_test_cost: sb.test_cost,
            ff_test_cost: ff.test_cost,
            sb_best_epoch: sb.best_epoch,
            ff_best_epoch: ff.best_epoch,
            sb_epoch_time_s: steady_epoch_time(&sb.history),
            ff_epoch_time_s: steady_epoch_time(&ff.history),
        })
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct EpochTiming {
    pub mean_s: f64,
    pub per_epoch: Vec<f64>,
}

/// Wall-clock time of each of `epochs` training epochs without early
/// stopping; the mean skips the first epoch when there is more than one.
pub fn measure_epoch_time(
    trainer: Trainer,
    config_sb: &TrainConfig,
    config_ff: &BaselineConfig,
    dataset: &Dataset,
    epochs: usize,
    seed: u64,
) -> Result<EpochTiming> {
    if epochs == 0 {
        return Err(Error::Config("epochs must be >= 1".into()));
    }
    let data = Prepared::new(dataset, seed, true)?;
    let started = Instant::now();
    let result = match trainer {
        Trainer::SplitBoost => train_for_epochs(config_sb, &data.a, &data.b, Some(&data.val), epochs)?,
        Trainer::Baseline => train_baseline_for_epochs(config_ff, &data.train()?, Some(&data.val), epochs)?,
    };
    log::debug!("timed {epochs} epochs in {:.3}s", started.elapsed().as_secs_f64());
    let per_epoch: Vec<f64> = result.history.iter().map(|r| r.wall_time_s).collect();
    Ok(EpochTiming {
        mean_s: steady_epoch_time(&result.history),
        per_epoch,
    })
}
