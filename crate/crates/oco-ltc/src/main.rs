//! Command-line harness: run cells, sweep horizons, execute the
//! verification battery, or re-fit rates from an existing summary.
//!
//! Exit codes: 0 when everything requested passed, 2 when runs completed
//! but a certificate failed or a proximal solve missed its tolerance, 1 on
//! errors (bad config, unreadable files, malformed inputs).

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Parser, Subcommand};

use oco_ltc::harness::runner::{cmd_fit, cmd_run, cmd_sweep, cmd_verify, RunOptions};
use oco_ltc::harness::{load_config, ExperimentConfig};

#[derive(Parser)]
#[command(
    name = "oco-ltc",
    version,
    about = "Online convex optimization with long-term constraints: \
             engines, environments, and per-run certificate checks"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Experiment config (TOML). Required by run, sweep, and verify.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    /// Output directory for summary.csv, reports, and traces.
    #[arg(long, global = true, value_name = "DIR", default_value = "out")]
    out: PathBuf,

    /// Also write per-step traces for sweep and verify (run always does).
    #[arg(long, global = true)]
    trace: bool,

    /// Worker threads; defaults to one per available core.
    #[arg(long, global = true, value_name = "N")]
    jobs: Option<usize>,

    /// Offset added to every environment seed; reruns with the same value
    /// reproduce the same summaries byte for byte (timing column aside).
    #[arg(long, global = true, value_name = "OFFSET")]
    seed_override: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Run every (horizon, seed) cell of the config; always writes traces.
    Run,
    /// Run a horizon sweep and fit log-log rates against the reference
    /// exponents.
    Sweep,
    /// Execute the full certificate battery over the config's verify grid.
    Verify,
    /// Re-fit rates from an existing summary.csv in the output directory.
    Fit,
}

fn dispatch(cli: &Cli) -> anyhow::Result<bool> {
    if let Some(jobs) = cli.jobs {
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
            .context("setting the worker thread count")?;
    }
    let opts = RunOptions {
        out_dir: cli.out.clone(),
        write_traces: cli.trace,
        seed_offset: cli.seed_override.unwrap_or(0),
    };
    let config: Option<ExperimentConfig> = match &cli.config {
        Some(path) => {
            Some(load_config(path).with_context(|| format!("loading {}", path.display()))?)
        }
        None => None,
    };
    let need_config = || -> anyhow::Result<&ExperimentConfig> {
        match &config {
            Some(c) => Ok(c),
            None => bail!("--config is required for this command"),
        }
    };
    let ok = match cli.command {
        Command::Run => cmd_run(need_config()?, &opts)?,
        Command::Sweep => cmd_sweep(need_config()?, &opts)?,
        Command::Verify => cmd_verify(need_config()?, &opts)?,
        Command::Fit => cmd_fit(&opts)?,
    };
    Ok(ok)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(1)
        }
    }
}
