use std::path::PathBuf;

use anyhow::Result;
use micalib::diagnostics::classify;
use micalib::io::load_frameset;
use serde::Serialize;

use super::Context;

#[derive(clap::Args)]
pub struct Args {
    #[arg(long)]
    pub manifest: PathBuf,
    #[arg(long)]
    pub intrinsics: PathBuf,
    /// Calibration to diagnose (no optimization is run).
    #[arg(long)]
    pub theta: PathBuf,
    #[arg(long)]
    pub first: Option<usize>,
    #[arg(long)]
    pub thresholds: Option<PathBuf>,
}

#[derive(Serialize)]
struct DiagnoseOutput {
    report: micalib::DiagnosticsReport,
    /// Absent when no thresholds are configured.
    verdict: Option<micalib::Verdict>,
}

pub fn run(ctx: &Context, args: Args) -> Result<()> {
    let cfg = ctx.load_config()?;
    let manifest = super::load_manifest(&args.manifest)?;
    let intrinsics = super::load_intrinsics(&args.intrinsics)?;
    let theta = super::load_calibration(&args.theta)?;
    let thresholds = super::load_thresholds(&args.thresholds, &cfg)?;

    let mut ids = manifest.frame_ids();
    if let Some(n) = args.first {
        ids.truncate(n);
    }
    let frames = load_frameset(&manifest, &ids, &cfg.load_options())?;
    let report = micalib::diagnostics::diagnose(
        &frames,
        &theta,
        &intrinsics,
        &cfg.mi,
        cfg.fd_step_rad(),
    )?;
    let verdict = thresholds.map(|thr| classify(&report, &thr));

    let output = DiagnoseOutput { report, verdict };
    ctx.write_resolved_config(&cfg)?;
    std::fs::write(
        ctx.out.join("diagnostics.json"),
        serde_json::to_string_pretty(&output)? + "\n",
    )?;
    println!("{}", serde_json::to_string_pretty(&output)?);
    Ok(())
}
