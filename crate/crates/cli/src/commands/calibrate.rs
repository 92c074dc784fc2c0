use std::path::PathBuf;

use anyhow::Result;
use micalib::diagnostics::{classify, diagnose};
use micalib::geometry::rotation_error_deg;
use micalib::io::load_frameset;
use micalib::optimizer::calibrate;

use crate::record::{write_records, RunRecord};

use super::Context;

#[derive(clap::Args)]
pub struct Args {
    /// Frame manifest CSV.
    #[arg(long)]
    pub manifest: PathBuf,
    /// Camera intrinsics JSON.
    #[arg(long)]
    pub intrinsics: PathBuf,
    /// Initial extrinsic guess (calibration JSON).
    #[arg(long)]
    pub theta0: PathBuf,
    /// Known reference calibration for error reporting.
    #[arg(long)]
    pub reference: Option<PathBuf>,
    /// Use only the first N frames of the manifest.
    #[arg(long)]
    pub first: Option<usize>,
    /// Classifier thresholds JSON (overrides the config's thresholds_path).
    #[arg(long)]
    pub thresholds: Option<PathBuf>,
}

pub fn run(ctx: &Context, args: Args) -> Result<()> {
    let cfg = ctx.load_config()?;
    let manifest = super::load_manifest(&args.manifest)?;
    let intrinsics = super::load_intrinsics(&args.intrinsics)?;
    let theta0 = super::load_calibration(&args.theta0)?;
    let reference = args.reference.as_deref().map(super::load_calibration).transpose()?;
    let thresholds = super::load_thresholds(&args.thresholds, &cfg)?;

    let mut ids = manifest.frame_ids();
    if let Some(n) = args.first {
        ids.truncate(n);
    }
    if ids.is_empty() {
        anyhow::bail!("manifest {} holds no frames", args.manifest.display());
    }
    let frames = load_frameset(&manifest, &ids, &cfg.load_options())?;

    let opt_cfg = cfg.optimizer.to_optimizer_config()?;
    log::info!("calibrating on {} frames", frames.len());
    let result = calibrate(&frames, &theta0, &intrinsics, &cfg.mi, &opt_cfg)?;
    let report = diagnose(
        &frames,
        &result.theta_star,
        &intrinsics,
        &cfg.mi,
        cfg.fd_step_rad(),
    )?;
    let verdict = thresholds.map(|thr| classify(&report, &thr));

    let record = RunRecord::new(
        0,
        &ids,
        &theta0,
        &result.theta_star,
        reference.map(|r| rotation_error_deg(&result.theta_star, &r)),
        &report,
        verdict,
        result.converged,
        result.evaluations,
        result.objective_at_start,
        result.elapsed_seconds,
    );
    ctx.write_resolved_config(&cfg)?;
    write_records(&ctx.out, std::slice::from_ref(&record))?;
    micalib::io::write_calibration(&ctx.out.join("calibration.json"), &result.theta_star)?;
    println!("{}", serde_json::to_string_pretty(&record)?);
    Ok(())
}
