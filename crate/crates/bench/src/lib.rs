//! Shared fixtures for the pipeline benchmarks.

use micalib::synthetic::{generate_scene, make_frameset, make_trajectory, NoiseConfig, SensorRig};
use micalib::FrameSet;

/// A deterministic benchmark frame set on the desk rig.
pub fn bench_frames(n: usize) -> (FrameSet, SensorRig) {
    let scene = generate_scene(7, 20).expect("benchmark scene");
    let rig = SensorRig::desk_rig();
    let traj = make_trajectory(7, n, 0.5);
    let noise = NoiseConfig {
        seed: 7,
        ..NoiseConfig::default()
    };
    let frames = make_frameset(&scene, &rig, &traj, &noise).expect("benchmark frames");
    (frames, rig)
}
