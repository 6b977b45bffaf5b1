//! `sbnn`: train, compare and check split-boost networks from the command line.

mod config;

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand};

use config::{RunArgs, RunConfig, SEED_ENV};
use sbnn::experiment::{
    baseline_pipeline, splitboost_pipeline, Prepared, SweepParam, SweepSpec, Trainer, DEFAULT_GAMMA_GRID,
    DEFAULT_LAMBDA_GRID,
};
use sbnn::gradcheck::{run_gradcheck, BASELINE_TOLERANCE, HYPERGRADIENT_TOLERANCE, JACOBIAN_TOLERANCE};
use sbnn::splitboost::history_csv;
use sbnn::{load_csv_with, run_monte_carlo, run_sweep, Dataset, Error};

/// Error that maps to the usage exit code.
#[derive(Debug)]
pub struct Usage(pub String);

impl fmt::Display for Usage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Usage {}

#[derive(Parser)]
#[command(name = "sbnn", version, about = "Split-boost neural network trainer")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Early-stopped training, retraining on train + validation, test score
    Train {
        #[command(flatten)]
        run: RunArgs,
        /// Model JSON output [default: model.json]
        #[arg(long, value_name = "FILE")]
        out: Option<PathBuf>,
        /// Per-epoch history CSV of the early-stopped run [default: history.csv]
        #[arg(long, value_name = "FILE")]
        history: Option<PathBuf>,
        /// Report the test cost in squared dollars instead of standardized units [default: false]
        #[arg(long)]
        usd: bool,
    },
    /// Paired Monte Carlo comparison of both trainers over seeds 0..N
    Bench {
        #[command(flatten)]
        run: RunArgs,
        /// Number of seeds [default: 50]
        #[arg(long)]
        seeds: Option<usize>,
        /// Report JSON output; the per-seed CSV goes next to it with a .csv extension [default: report.json]
        #[arg(long, value_name = "FILE")]
        out: Option<PathBuf>,
        /// Per-seed CSV output [default: --out with a .csv extension]
        #[arg(long, value_name = "FILE")]
        csv: Option<PathBuf>,
    },
    /// Validation cost over a grid of gamma or lambda values
    Sweep {
        #[command(flatten)]
        run: RunArgs,
        /// Parameter to vary: gamma or lambda [default: gamma]
        #[arg(long)]
        param: Option<SweepParam>,
        /// Comma-separated grid [default: 0.001,0.005,0.01,0.05,0.1,0.5 for gamma; 0.0001,0.001,0.01,0.1,1 for lambda]
        #[arg(long, value_delimiter = ',')]
        values: Option<Vec<f64>>,
        /// CSV output [default: standard output]
        #[arg(long, value_name = "FILE")]
        out: Option<PathBuf>,
    },
    /// Finite-difference check of every analytic derivative
    Gradcheck {
        /// Instance seed; falls back to $SBNN_SEED [default: 0]
        #[arg(long)]
        seed: Option<u64>,
        /// Instances of each kind [default: 10]
        #[arg(long)]
        instances: Option<usize>,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(2)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli.command) {
        Ok(code) => code,
        Err(e) => {
            // library errors already carry their cause in the message
            if e.downcast_ref::<Error>().is_some() {
                eprintln!("error: {e}");
            } else {
                eprintln!("error: {e:#}");
            }
            ExitCode::from(exit_code(&e))
        }
    }
}

fn exit_code(e: &anyhow::Error) -> u8 {
    if e.downcast_ref::<Usage>().is_some() {
        return 2;
    }
    match e.downcast_ref::<Error>() {
        Some(Error::Open { .. } | Error::Ingest { .. } | Error::Header { .. } | Error::NoData | Error::Config(_)) => 2,
        _ => 1,
    }
}

fn env_seed() -> Option<String> {
    std::env::var(SEED_ENV).ok()
}

fn prepare(run: &RunArgs) -> anyhow::Result<(RunConfig, Dataset)> {
    let cfg = run.resolve(env_seed().as_deref())?;
    cfg.validate()?;
    let dataset = load_csv_with(cfg.data_path()?, &cfg.schema())?;
    Ok((cfg, dataset))
}

fn write(path: &Path, contents: &str) -> anyhow::Result<()> {
    fs::write(path, contents).with_context(|| format!("cannot write {}", path.display()))
}

fn run(command: Command) -> anyhow::Result<ExitCode> {
    match command {
        Command::Train { run, out, history, usd } => {
            let (cfg, dataset) = prepare(&run)?;
            let data = Prepared::new(&dataset, cfg.seed, cfg.standardize)?;
            let outcome = match cfg.trainer {
                Trainer::SplitBoost => splitboost_pipeline(&cfg.splitboost(), &data)?,
                Trainer::Baseline => baseline_pipeline(&cfg.baseline(), &data)?,
            };
            outcome
                .params
                .save(&out.unwrap_or_else(|| "model.json".into()), data.scaler.as_ref())?;
            write(
                &history.unwrap_or_else(|| "history.csv".into()),
                &history_csv(&outcome.history),
            )?;
            let j_test = match (&data.scaler, usd) {
                (Some(s), true) => outcome.test_cost * s.target_std * s.target_std,
                _ => outcome.test_cost,
            };
            println!("best_epoch={} j_test={j_test}", outcome.best_epoch);
        }
        Command::Bench { run, seeds, out, csv } => {
            let (cfg, dataset) = prepare(&run)?;
            let seeds = seeds.unwrap_or(50);
            if seeds == 0 {
                return Err(Usage("--seeds must be >= 1".into()).into());
            }
            let report = run_monte_carlo(
                seeds,
                &cfg.splitboost(),
                &cfg.baseline(),
                &dataset,
                cfg.workers,
                cfg.standardize,
            )?;
            let out = out.unwrap_or_else(|| "report.json".into());
            let csv = csv.unwrap_or_else(|| out.with_extension("csv"));
            write(&out, &report.to_json()?)?;
            write(&csv, &report.seeds_csv())?;
            println!(
                "win_rate={} seeds={} diverged={}",
                report.win_rate,
                report.seeds.len(),
                report.diverged_seeds.len()
            );
        }
        Command::Sweep {
            run,
            param,
            values,
            out,
        } => {
            let (cfg, dataset) = prepare(&run)?;
            let parameter = param.unwrap_or(SweepParam::Gamma);
            let values = values.unwrap_or_else(|| match parameter {
                SweepParam::Gamma => DEFAULT_GAMMA_GRID.to_vec(),
                SweepParam::Lambda => DEFAULT_LAMBDA_GRID.to_vec(),
            });
            let spec = SweepSpec {
                parameter,
                values,
                trainer: cfg.trainer,
                splitboost: cfg.splitboost(),
                baseline: cfg.baseline(),
            };
            let table = run_sweep(&spec, &dataset, cfg.seed, cfg.standardize)?;
            match out {
                Some(path) => write(&path, &table.to_csv())?,
                None => print!("{}", table.to_csv()),
            }
            match table.argmin {
                Some(v) => eprintln!("argmin={v}"),
                None => eprintln!("argmin=none (every run diverged)"),
            }
        }
        Command::Gradcheck { seed, instances } => {
            let seed = match seed {
                Some(s) => s,
                None => match env_seed() {
                    Some(v) => v
                        .trim()
                        .parse()
                        .map_err(|_| Usage(format!("{SEED_ENV}=`{v}` is not an unsigned integer")))?,
                    None => 0,
                },
            };
            let report = run_gradcheck(seed, instances.unwrap_or(10))?;
            println!(
                "w1_gradient={:e} (tolerance {HYPERGRADIENT_TOLERANCE:e})",
                report.w1_gradient
            );
            println!(
                "w2_jacobian={:e} (tolerance {JACOBIAN_TOLERANCE:e})",
                report.w2_jacobian
            );
            println!(
                "baseline_gradients={:e} (tolerance {BASELINE_TOLERANCE:e})",
                report.baseline_gradients
            );
            if !report.passed() {
                eprintln!("error: gradient check exceeded tolerance");
                return Ok(ExitCode::from(1));
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}
