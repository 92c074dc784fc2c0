//! Continuous camera-LiDAR extrinsic calibration from depth-feature mutual
//! information: one-shot calibration, continuous monitoring, self-diagnosis,
//! failure studies, synthetic data generation and benchmarks.
//!
//! Results go to files under `--out` and to standard output; logs go to
//! standard error. Exit code is nonzero only for errors — a classifier
//! failure verdict is data, not an error.

mod commands;
mod record;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(name = "micalib", version, about)]
struct Cli {
    /// Run configuration JSON; defaults apply when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Seed override for every random choice the command makes.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Output directory for result files.
    #[arg(long, global = true, default_value = "micalib-out")]
    out: PathBuf,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Calibrate once on a set of frames and diagnose the result.
    Calibrate(commands::calibrate::Args),
    /// Slide a window over the sequence, re-calibrating continuously.
    Monitor(commands::monitor::Args),
    /// Compute the self-diagnosis metrics at a given calibration, without
    /// optimizing.
    Diagnose(commands::diagnose::Args),
    /// Run many perturbed calibrations and classify every outcome.
    FailureStudy(commands::failure_study::Args),
    /// Time the MI objective and the full optimization over frame counts.
    Bench(commands::bench::Args),
    /// Generate a synthetic dataset with known ground-truth extrinsics.
    Synth(commands::synth::Args),
    /// Fit classifier thresholds from truth-side and error-side windows.
    FitThresholds(commands::fit_thresholds::Args),
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .format_timestamp(None)
        .init();

    let cli = Cli::parse();
    let ctx = commands::Context {
        config_path: cli.config,
        seed: cli.seed,
        out: cli.out,
    };
    let result = match cli.command {
        Command::Calibrate(args) => commands::calibrate::run(&ctx, args),
        Command::Monitor(args) => commands::monitor::run(&ctx, args),
        Command::Diagnose(args) => commands::diagnose::run(&ctx, args),
        Command::FailureStudy(args) => commands::failure_study::run(&ctx, args),
        Command::Bench(args) => commands::bench::run(&ctx, args),
        Command::Synth(args) => commands::synth::run(&ctx, args),
        Command::FitThresholds(args) => commands::fit_thresholds::run(&ctx, args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            log::error!("{err:#}");
            ExitCode::FAILURE
        }
    }
}
