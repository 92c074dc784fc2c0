use std::path::PathBuf;

use anyhow::Result;
use micalib::diagnostics::{classify, diagnose};
use micalib::geometry::{
    params_to_transform, rotation_error_deg, sample_rotation_perturbation,
};
use micalib::io::load_frameset;
use micalib::optimizer::calibrate;
use micalib::Verdict;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::record::{write_records, RunRecord};

use super::Context;

#[derive(clap::Args)]
pub struct Args {
    #[arg(long)]
    pub manifest: PathBuf,
    #[arg(long)]
    pub intrinsics: PathBuf,
    /// Reference calibration the perturbations start from and errors are
    /// scored against.
    #[arg(long)]
    pub reference: PathBuf,
    #[arg(long, default_value_t = 100)]
    pub trials: usize,
    /// Initial rotation error radius in degrees.
    #[arg(long, default_value_t = 25.0)]
    pub radius_deg: f64,
    #[arg(long)]
    pub first: Option<usize>,
    #[arg(long)]
    pub thresholds: Option<PathBuf>,
}

/// Polar coordinates of one trial for bullseye-style plotting: where the
/// initial error pointed and how far the optimization ended up.
#[derive(Debug, Serialize)]
struct TrialPolar {
    trial: u64,
    axis_azimuth_deg: f64,
    axis_elevation_deg: f64,
    initial_error_deg: f64,
    final_error_deg: f64,
    converged: bool,
    verdict: Option<Verdict>,
}

#[derive(Debug, Serialize)]
struct StudySummary {
    trials: usize,
    radius_deg: f64,
    converged: usize,
    success_verdicts: usize,
    failure_verdicts: usize,
    /// Trials below 0.5 degrees final error.
    under_half_degree: usize,
    /// Trials above 1 degree final error.
    over_one_degree: usize,
    mean_final_error_deg: f64,
}

pub fn run(ctx: &Context, args: Args) -> Result<()> {
    if args.trials == 0 {
        anyhow::bail!("failure study needs at least one trial");
    }
    let cfg = ctx.load_config()?;
    let manifest = super::load_manifest(&args.manifest)?;
    let intrinsics = super::load_intrinsics(&args.intrinsics)?;
    let reference = super::load_calibration(&args.reference)?;
    let thresholds = super::load_thresholds(&args.thresholds, &cfg)?;
    let opt_cfg = cfg.optimizer.to_optimizer_config()?;

    let mut ids = manifest.frame_ids();
    if let Some(n) = args.first {
        ids.truncate(n);
    }
    let frames = load_frameset(&manifest, &ids, &cfg.load_options())?;

    let base_seed = ctx.seed(&cfg);
    let mut records = Vec::with_capacity(args.trials);
    let mut polars = Vec::with_capacity(args.trials);
    for trial in 0..args.trials as u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(base_seed ^ (trial + 1).wrapping_mul(0x9E37_79B9));
        let delta = sample_rotation_perturbation(args.radius_deg, &mut rng);
        let theta0 = reference.perturbed_by(&delta);
        let initial_error = rotation_error_deg(&theta0, &reference);

        let result = calibrate(&frames, &theta0, &intrinsics, &cfg.mi, &opt_cfg)?;
        let report = diagnose(
            &frames,
            &result.theta_star,
            &intrinsics,
            &cfg.mi,
            cfg.fd_step_rad(),
        )?;
        let verdict = thresholds.as_ref().map(|thr| classify(&report, thr));
        let final_error = rotation_error_deg(&result.theta_star, &reference);

        let (ax, ay, az) = params_to_transform(&delta)
            .rotation()
            .axis()
            .map(|a| (a.x, a.y, a.z))
            .unwrap_or((0.0, 0.0, 1.0));
        polars.push(TrialPolar {
            trial,
            axis_azimuth_deg: ay.atan2(ax).to_degrees(),
            axis_elevation_deg: az.clamp(-1.0, 1.0).asin().to_degrees(),
            initial_error_deg: initial_error,
            final_error_deg: final_error,
            converged: result.converged,
            verdict,
        });
        records.push(RunRecord::new(
            trial,
            &ids,
            &theta0,
            &result.theta_star,
            Some(final_error),
            &report,
            verdict,
            result.converged,
            result.evaluations,
            result.objective_at_start,
            result.elapsed_seconds,
        ));
        log::info!(
            "trial {trial}: initial {initial_error:.2} deg -> final {final_error:.3} deg, verdict {verdict:?}"
        );
    }

    let summary = StudySummary {
        trials: args.trials,
        radius_deg: args.radius_deg,
        converged: records.iter().filter(|r| r.converged).count(),
        success_verdicts: records
            .iter()
            .filter(|r| r.verdict == Some(Verdict::Success))
            .count(),
        failure_verdicts: records
            .iter()
            .filter(|r| r.verdict == Some(Verdict::Failure))
            .count(),
        under_half_degree: polars.iter().filter(|p| p.final_error_deg < 0.5).count(),
        over_one_degree: polars.iter().filter(|p| p.final_error_deg > 1.0).count(),
        mean_final_error_deg: polars.iter().map(|p| p.final_error_deg).sum::<f64>()
            / args.trials as f64,
    };

    ctx.write_resolved_config(&cfg)?;
    write_records(&ctx.out, &records)?;
    let mut w = csv::Writer::from_path(ctx.out.join("bullseye.csv"))?;
    for p in &polars {
        w.serialize(p)?;
    }
    w.flush()?;
    std::fs::write(
        ctx.out.join("summary.json"),
        serde_json::to_string_pretty(&summary)? + "\n",
    )?;
    println!("{}", serde_json::to_string_pretty(&summary)?);
    Ok(())
}
