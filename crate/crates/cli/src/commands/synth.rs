use anyhow::Result;
use micalib::geometry::sample_rotation_perturbation;
use micalib::io::{write_calibration, write_dataset, write_intrinsics};
use micalib::synthetic::{
    generate_scene, make_frameset, make_trajectory, DepthDistortion, NoiseConfig, SensorRig,
};
use micalib::FrameSet;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::Context;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum DistortKind {
    None,
    Affine,
    Inverse,
}

#[derive(clap::Args)]
pub struct Args {
    /// Frames to generate.
    #[arg(long, default_value_t = 25)]
    pub frames: usize,
    /// Scene primitive count.
    #[arg(long, default_value_t = 20)]
    pub complexity: usize,
    /// Trajectory spacing between frames, meters.
    #[arg(long, default_value_t = 3.0)]
    pub spacing: f64,
    /// Monotone depth distortion emulating monodepth output.
    #[arg(long, value_enum, default_value_t = DistortKind::None)]
    pub distort: DistortKind,
    /// Gaussian noise on normalized depth values.
    #[arg(long, default_value_t = 0.0)]
    pub depth_noise: f64,
    /// Gaussian range noise on LiDAR returns, meters.
    #[arg(long, default_value_t = 0.02)]
    pub lidar_noise: f64,
    /// Unmask this many border pixels.
    #[arg(long, default_value_t = 0)]
    pub border_px: u32,
    /// Inject a rotation disturbance into the rig from this frame on.
    #[arg(long)]
    pub disturb_at_frame: Option<usize>,
    /// Disturbance magnitude in degrees.
    #[arg(long, default_value_t = 5.0)]
    pub disturb_deg: f64,
    /// Manifest timestamp rate.
    #[arg(long, default_value_t = 10.0)]
    pub rate_hz: f64,
}

#[derive(Serialize)]
struct GenerationMeta {
    seed: u64,
    frames: usize,
    complexity: usize,
    spacing_m: f64,
    noise: NoiseConfig,
    disturb_at_frame: Option<usize>,
    disturb_deg: Option<f64>,
}

pub fn run(ctx: &Context, args: Args) -> Result<()> {
    let cfg = ctx.load_config()?;
    let seed = ctx.seed(&cfg);
    if args.frames == 0 {
        anyhow::bail!("need at least one frame");
    }

    std::fs::create_dir_all(&ctx.out)?;
    let scene = generate_scene(seed, args.complexity)?;
    let rig = SensorRig::desk_rig();
    let trajectory = make_trajectory(seed, args.frames, args.spacing);
    let noise = NoiseConfig {
        seed,
        lidar_range_sigma_m: args.lidar_noise,
        depth_noise_sigma: args.depth_noise,
        depth_distortion: match args.distort {
            DistortKind::None => DepthDistortion::None,
            DistortKind::Affine => DepthDistortion::Affine {
                gain: 0.37,
                offset: 0.12,
            },
            DistortKind::Inverse => DepthDistortion::Inverse { c: 0.25 },
        },
        border_mask_px: args.border_px,
        ..NoiseConfig::default()
    };

    let frames = match args.disturb_at_frame {
        None => make_frameset(&scene, &rig, &trajectory, &noise)?,
        Some(k) => {
            // the physical-disturbance story: the rig's true extrinsics
            // change mid-sequence
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xd157);
            let delta = sample_rotation_perturbation(args.disturb_deg, &mut rng);
            let disturbed_rig = SensorRig {
                extrinsics: rig.extrinsics.perturbed_by(&delta),
                ..rig.clone()
            };
            let k = k.min(trajectory.len());
            let before = make_frameset(&scene, &rig, &trajectory[..k], &noise)?;
            let after = make_frameset(&scene, &disturbed_rig, &trajectory[k..], &noise)?;
            write_calibration(
                &ctx.out.join("reference_disturbed.json"),
                &disturbed_rig.extrinsics,
            )?;
            let mut all = before.frames;
            all.extend(after.frames);
            FrameSet::new(all)
        }
    };

    write_dataset(&ctx.out, &frames, args.rate_hz)?;
    write_intrinsics(&ctx.out.join("intrinsics.json"), &rig.intrinsics)?;
    write_calibration(&ctx.out.join("reference_calibration.json"), &rig.extrinsics)?;

    let meta = GenerationMeta {
        seed,
        frames: args.frames,
        complexity: args.complexity,
        spacing_m: args.spacing,
        noise,
        disturb_at_frame: args.disturb_at_frame,
        disturb_deg: args.disturb_at_frame.map(|_| args.disturb_deg),
    };
    std::fs::write(
        ctx.out.join("generation.json"),
        serde_json::to_string_pretty(&meta)? + "\n",
    )?;
    log::info!(
        "wrote {} synthetic frames to {}",
        args.frames,
        ctx.out.display()
    );
    println!("{}", serde_json::to_string_pretty(&meta)?);
    Ok(())
}
