//! `gbst` — train, apply and evaluate gradient-boosted survival-tree models
//! on censored tabular data.
//!
//! Exit codes: 0 success, 1 usage error, 2 data error, 3 internal error.

mod config;
mod error;
mod ops;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::config::load_config;
use crate::error::{CliError, Result};

#[derive(Debug, Parser)]
#[command(name = "gbst", version, about = "Gradient-boosted survival trees")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct CommonArgs {
    /// TOML run configuration.
    #[arg(short = 'c', long)]
    config: Option<PathBuf>,
    /// Input CSV; overrides `data.path` from the config.
    #[arg(long)]
    data: Option<PathBuf>,
    /// Output directory; overrides `output.dir` from the config.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Rayon worker threads (default: GBST_THREADS, then all cores).
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Fit a model; writes model.json, plan.json and loss_trace.csv.
    Train {
        #[command(flatten)]
        common: CommonArgs,
        /// RNG seed; overrides `booster.rng_seed` from the config.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Score a CSV with a trained model; writes predictions.csv.
    Predict {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long)]
        model: PathBuf,
        /// Preprocessing plan produced by `train`.
        #[arg(long)]
        plan: PathBuf,
    },
    /// Compute C-index, per-period AUC/KS and decile tables on labeled data.
    Evaluate {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        plan: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            // help/version requests are successes, everything else is usage
            let code = if err.use_stderr() { 1 } else { 0 };
            let _ = err.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("gbst: {err}");
            ExitCode::from(err.exit_code() as u8)
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    let common = match &cli.command {
        Command::Train { common, .. }
        | Command::Predict { common, .. }
        | Command::Evaluate { common, .. } => common,
    };
    install_thread_pool(common.threads)?;
    let config = load_config(common.config.as_deref())?;

    let out_dir = common.out.clone().unwrap_or_else(|| config.output.dir.clone());
    let data_path = common
        .data
        .clone()
        .or_else(|| config.data.path.clone())
        .ok_or_else(|| CliError::Usage("no input data: pass --data or set data.path".into()))?;

    match cli.command {
        Command::Train { seed, .. } => {
            let outputs = ops::train(&config, &data_path, &out_dir, seed)?;
            println!("wrote {}", outputs.model.display());
            println!("wrote {}", outputs.plan.display());
            println!("wrote {}", outputs.loss_trace.display());
        }
        Command::Predict { model, plan, .. } => {
            let path = ops::predict(&model, &plan, &data_path, &out_dir)?;
            println!("wrote {}", path.display());
        }
        Command::Evaluate { model, plan, .. } => {
            let outputs = ops::evaluate(&config, &model, &plan, &data_path, &out_dir)?;
            println!("wrote {}", outputs.report.display());
            println!("wrote {}", outputs.period_metrics.display());
            println!("wrote {}", outputs.deciles.display());
        }
    }
    Ok(())
}

fn install_thread_pool(flag: Option<usize>) -> Result<()> {
    let threads = match flag {
        Some(n) => Some(n),
        None => match std::env::var("GBST_THREADS") {
            Ok(v) => Some(v.parse().map_err(|_| {
                CliError::Usage(format!("GBST_THREADS must be a positive integer, got '{v}'"))
            })?),
            Err(_) => None,
        },
    };
    if let Some(n) = threads {
        if n == 0 {
            return Err(CliError::Usage("--threads must be >= 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Internal(format!("thread pool init failed: {e}")))?;
    }
    Ok(())
}
