//! Experiment runner for asynchronous DGD / DGD-ATC.
//!
//! Subcommands: `run`, `verify`, `sweep`, `replay`. Experiments are
//! described by a JSON config (see docs/formats.md); `--out`, `--seed`, and
//! `--mode` override the corresponding config fields.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use asyncdgd_cli::commands::{cmd_replay, cmd_run, cmd_sweep, cmd_verify, Overrides, SweepAxis};
use asyncdgd_cli::config::RunMode;

#[derive(Parser)]
#[command(
    name = "asyncdgd",
    version,
    about = "asynchronous DGD / DGD-ATC experiment runner"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct CommonArgs {
    /// Experiment config (JSON)
    #[arg(long)]
    config: PathBuf,
    /// Output directory (overrides the config's out_dir)
    #[arg(long)]
    out: Option<PathBuf>,
    /// Top-level seed (overrides the config's seed)
    #[arg(long)]
    seed: Option<u64>,
    /// Execution mode (overrides the config's mode)
    #[arg(long, value_parser = parse_mode)]
    mode: Option<RunMode>,
}

fn parse_mode(s: &str) -> Result<RunMode, String> {
    match s {
        "sim" => Ok(RunMode::Sim),
        "live" => Ok(RunMode::Live),
        other => Err(format!("unknown mode {other:?} (sim|live)")),
    }
}

impl CommonArgs {
    fn overrides(&self) -> Overrides {
        Overrides {
            out: self.out.clone(),
            seed: self.seed,
            mode: self.mode,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Run the configured experiment and write its artifacts
    Run(CommonArgs),
    /// Check the theory on the configured instance (oracle agreement,
    /// pseudo-contraction, rate envelope, optimality-gap bounds)
    Verify(CommonArgs),
    /// One run per value along an axis, combined into sweep.csv
    Sweep {
        #[command(flatten)]
        common: CommonArgs,
        /// Sweep axis: alpha (fractions of the bound), b, d, or n
        #[arg(long)]
        axis: SweepAxis,
        /// Comma-separated values
        #[arg(long, value_delimiter = ',')]
        values: Vec<f64>,
    },
    /// Re-execute a recorded run and require identical artifacts
    Replay {
        /// Directory holding manifest.json, trace.csv, gap.csv, rate.csv
        /// (and replay.log for live runs)
        #[arg(long)]
        run_dir: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run(common) => cmd_run(&common.config, &common.overrides()).map(|_| ()),
        Command::Verify(common) => cmd_verify(&common.config, &common.overrides()),
        Command::Sweep {
            common,
            axis,
            values,
        } => cmd_sweep(&common.config, &common.overrides(), *axis, values).map(|_| ()),
        Command::Replay { run_dir } => cmd_replay(run_dir),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
