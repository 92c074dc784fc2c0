use std::path::PathBuf;
use std::time::Instant;

use anyhow::Result;
use micalib::io::load_frameset;
use micalib::mi::average_mi;
use micalib::optimizer::calibrate;
use micalib::FrameSet;
use serde::Serialize;

use super::Context;

#[derive(clap::Args)]
pub struct Args {
    #[arg(long)]
    pub manifest: PathBuf,
    #[arg(long)]
    pub intrinsics: PathBuf,
    /// Starting guess for the timed optimizations.
    #[arg(long)]
    pub theta0: PathBuf,
    /// Frame counts to time.
    #[arg(long, value_delimiter = ',', default_values_t = [5usize, 25, 50])]
    pub counts: Vec<usize>,
    /// Repetitions of the single-objective-evaluation timing.
    #[arg(long, default_value_t = 100)]
    pub mi_reps: usize,
    /// Repetitions of the full-optimization timing.
    #[arg(long, default_value_t = 100)]
    pub opt_reps: usize,
}

#[derive(Debug, Serialize)]
struct BenchRow {
    frames: usize,
    mi_mean_ms: f64,
    mi_std_ms: f64,
    opt_mean_ms: f64,
    opt_std_ms: f64,
    opt_evaluations: usize,
}

fn mean_std(samples: &[f64]) -> (f64, f64) {
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    if samples.len() < 2 {
        return (mean, 0.0);
    }
    let var = samples.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

pub fn run(ctx: &Context, args: Args) -> Result<()> {
    let cfg = ctx.load_config()?;
    let manifest = super::load_manifest(&args.manifest)?;
    let intrinsics = super::load_intrinsics(&args.intrinsics)?;
    let theta0 = super::load_calibration(&args.theta0)?;
    let opt_cfg = cfg.optimizer.to_optimizer_config()?;

    let ids = manifest.frame_ids();
    let mut rows = Vec::new();
    for &count in &args.counts {
        if count == 0 || count > ids.len() {
            anyhow::bail!("frame count {count} not available in manifest of {}", ids.len());
        }
        let frames = load_frameset(&manifest, &ids[..count], &cfg.load_options())?;
        let frames = FrameSet::new(frames.frames);

        // warmup, then timed single evaluations
        average_mi(&frames, &theta0, &intrinsics, &cfg.mi)?;
        let mut mi_times = Vec::with_capacity(args.mi_reps);
        for _ in 0..args.mi_reps {
            let t0 = Instant::now();
            average_mi(&frames, &theta0, &intrinsics, &cfg.mi)?;
            mi_times.push(t0.elapsed().as_secs_f64() * 1e3);
        }
        let (mi_mean_ms, mi_std_ms) = mean_std(&mi_times);

        let mut opt_times = Vec::with_capacity(args.opt_reps);
        let mut evaluations = 0;
        for _ in 0..args.opt_reps {
            let t0 = Instant::now();
            let result = calibrate(&frames, &theta0, &intrinsics, &cfg.mi, &opt_cfg)?;
            opt_times.push(t0.elapsed().as_secs_f64() * 1e3);
            evaluations = result.evaluations;
        }
        let (opt_mean_ms, opt_std_ms) = mean_std(&opt_times);

        log::info!(
            "{count} frames: MI {mi_mean_ms:.3} ± {mi_std_ms:.3} ms, optimization {opt_mean_ms:.1} ± {opt_std_ms:.1} ms"
        );
        rows.push(BenchRow {
            frames: count,
            mi_mean_ms,
            mi_std_ms,
            opt_mean_ms,
            opt_std_ms,
            opt_evaluations: evaluations,
        });
    }

    ctx.write_resolved_config(&cfg)?;
    std::fs::create_dir_all(&ctx.out)?;
    let mut w = csv::Writer::from_path(ctx.out.join("bench.csv"))?;
    for row in &rows {
        w.serialize(row)?;
    }
    w.flush()?;
    println!("{}", serde_json::to_string_pretty(&rows)?);
    Ok(())
}
