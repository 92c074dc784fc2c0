use std::path::PathBuf;

use anyhow::Result;
use micalib::diagnostics::{diagnose, fit_thresholds};
use micalib::geometry::sample_rotation_perturbation;
use micalib::io::{load_frameset, sliding_windows, write_thresholds, ThresholdFitMeta};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::Context;

#[derive(clap::Args)]
pub struct Args {
    #[arg(long)]
    pub manifest: PathBuf,
    #[arg(long)]
    pub intrinsics: PathBuf,
    /// Calibration treated as the truth side of the fit.
    #[arg(long)]
    pub reference: PathBuf,
    /// Number of leading windows used for fitting.
    #[arg(long, default_value_t = 10)]
    pub windows: usize,
    /// Error radius of the perturbed probes, degrees.
    #[arg(long, default_value_t = 1.5)]
    pub error_deg: f64,
    /// Perturbed probes per window.
    #[arg(long, default_value_t = 3)]
    pub probes: usize,
}

pub fn run(ctx: &Context, args: Args) -> Result<()> {
    let cfg = ctx.load_config()?;
    let manifest = super::load_manifest(&args.manifest)?;
    let intrinsics = super::load_intrinsics(&args.intrinsics)?;
    let reference = super::load_calibration(&args.reference)?;

    let all_windows = sliding_windows(&manifest, cfg.window.length, cfg.window.stride)?;
    if all_windows.len() < args.windows {
        anyhow::bail!(
            "manifest yields {} windows, need {}",
            all_windows.len(),
            args.windows
        );
    }

    let mut rng = ChaCha8Rng::seed_from_u64(ctx.seed(&cfg) ^ 0xf17);
    let h = cfg.fd_step_rad();
    let mut truth_reports = Vec::new();
    let mut error_reports = Vec::new();
    for ids in all_windows.iter().take(args.windows) {
        let frames = load_frameset(&manifest, ids, &cfg.load_options())?;
        truth_reports.push(diagnose(&frames, &reference, &intrinsics, &cfg.mi, h)?);
        for _ in 0..args.probes {
            let delta = sample_rotation_perturbation(args.error_deg, &mut rng);
            let probe = reference.perturbed_by(&delta);
            error_reports.push(diagnose(&frames, &probe, &intrinsics, &cfg.mi, h)?);
        }
    }

    let (thresholds, separation) = fit_thresholds(&truth_reports, &error_reports)?;
    ctx.write_resolved_config(&cfg)?;
    write_thresholds(
        &ctx.out.join("thresholds.json"),
        &thresholds,
        Some(ThresholdFitMeta {
            truth_reports: truth_reports.len(),
            error_reports: error_reports.len(),
            error_radius_deg: args.error_deg,
            separation: separation.clone(),
        }),
    )?;
    log::info!(
        "fitted thresholds on {} truth / {} error reports",
        truth_reports.len(),
        error_reports.len()
    );
    println!(
        "{}",
        serde_json::to_string_pretty(&serde_json::json!({
            "thresholds": { "mi_lim": thresholds.mi_lim, "grad_lim": thresholds.grad_lim, "curv_lim": thresholds.curv_lim },
            "separation": separation,
        }))?
    );
    Ok(())
}
