use std::path::PathBuf;

use anyhow::Result;
use clap::ValueEnum;
use micalib::diagnostics::{classify, diagnose};
use micalib::geometry::rotation_error_deg;
use micalib::io::{load_frameset, sliding_windows};
use micalib::optimizer::calibrate;
use micalib::Verdict;

use crate::record::{write_records, RunRecord};

use super::Context;

/// Where each window's optimization starts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ReseedMode {
    /// Seed from the last accepted estimate (operational continuous mode).
    Previous,
    /// Always restart from the configured initial guess (evaluation
    /// protocol).
    Fixed,
}

#[derive(clap::Args)]
pub struct Args {
    #[arg(long)]
    pub manifest: PathBuf,
    #[arg(long)]
    pub intrinsics: PathBuf,
    /// Initial extrinsic guess for the first window.
    #[arg(long)]
    pub theta0: PathBuf,
    /// Known reference calibration for error reporting.
    #[arg(long)]
    pub reference: Option<PathBuf>,
    #[arg(long)]
    pub thresholds: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = ReseedMode::Previous)]
    pub reseed_mode: ReseedMode,
}

pub fn run(ctx: &Context, args: Args) -> Result<()> {
    let cfg = ctx.load_config()?;
    let manifest = super::load_manifest(&args.manifest)?;
    let intrinsics = super::load_intrinsics(&args.intrinsics)?;
    let theta0 = super::load_calibration(&args.theta0)?;
    let reference = args.reference.as_deref().map(super::load_calibration).transpose()?;
    let thresholds = super::load_thresholds(&args.thresholds, &cfg)?;
    let opt_cfg = cfg.optimizer.to_optimizer_config()?;

    let windows = sliding_windows(&manifest, cfg.window.length, cfg.window.stride)?;
    log::info!(
        "monitoring {} windows of {} frames (stride {})",
        windows.len(),
        cfg.window.length,
        cfg.window.stride
    );

    let mut records = Vec::with_capacity(windows.len());
    // a failed window keeps the last accepted estimate as the next seed
    let mut last_accepted = theta0;
    for (w, ids) in windows.iter().enumerate() {
        let seed = match args.reseed_mode {
            ReseedMode::Previous => last_accepted,
            ReseedMode::Fixed => theta0,
        };
        let frames = load_frameset(&manifest, ids, &cfg.load_options())?;
        let result = calibrate(&frames, &seed, &intrinsics, &cfg.mi, &opt_cfg)?;
        let report = diagnose(
            &frames,
            &result.theta_star,
            &intrinsics,
            &cfg.mi,
            cfg.fd_step_rad(),
        )?;
        let verdict = thresholds.as_ref().map(|thr| classify(&report, thr));
        if verdict != Some(Verdict::Failure) {
            last_accepted = result.theta_star;
        }
        records.push(RunRecord::new(
            w as u64,
            ids,
            &seed,
            &result.theta_star,
            reference.map(|r| rotation_error_deg(&result.theta_star, &r)),
            &report,
            verdict,
            result.converged,
            result.evaluations,
            result.objective_at_start,
            result.elapsed_seconds,
        ));
        log::info!(
            "window {w}: mi {:.4}, converged {}, verdict {:?}",
            report.mi_value,
            result.converged,
            verdict
        );
    }

    ctx.write_resolved_config(&cfg)?;
    write_records(&ctx.out, &records)?;
    micalib::io::write_calibration(&ctx.out.join("calibration.json"), &last_accepted)?;
    println!("{}", serde_json::to_string_pretty(&records)?);
    Ok(())
}
