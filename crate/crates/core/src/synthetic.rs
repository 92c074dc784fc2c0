//! Ground-truth scene generator and sensor simulators.
//!
//! Every acceptance fixture comes from here: an analytic scene of planes and
//! axis-aligned boxes, a depth renderer that unprojects each pixel through the
//! double-sphere model (the inverse lives here, test-support only) and casts
//! it into the scene, and a spinning-beam LiDAR simulator. Because the rig's
//! extrinsics are known exactly, recovered calibrations can be scored against
//! ground truth.
//!
//! Frames use a z-forward, x-right, y-down convention; the ground plane sits
//! at positive y below the sensors.

use nalgebra::{Point3, Rotation3, Unit, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::camera::DoubleSphereIntrinsics;
use crate::features::{DepthMap, Frame, FrameSet, PointCloud};
use crate::geometry::{params_to_transform, ExtrinsicParams, RigidTransform};
use crate::{Error, Result};

const RAY_EPS: f64 = 1e-9;

/// An analytic scene primitive.
#[derive(Debug, Clone)]
pub enum Primitive {
    /// Infinite plane through `point` with unit `normal`.
    Plane {
        point: Point3<f64>,
        normal: Unit<Vector3<f64>>,
    },
    /// Axis-aligned box.
    Aabb { min: Point3<f64>, max: Point3<f64> },
}

impl Primitive {
    /// First intersection parameter along `origin + t·dir` (unit `dir`),
    /// `t > RAY_EPS`.
    pub fn intersect(&self, origin: &Point3<f64>, dir: &Vector3<f64>) -> Option<f64> {
        match self {
            Primitive::Plane { point, normal } => {
                let denom = dir.dot(normal);
                if denom.abs() < 1e-12 {
                    return None;
                }
                let t = (point - origin).dot(normal) / denom;
                (t > RAY_EPS).then_some(t)
            }
            Primitive::Aabb { min, max } => {
                let mut t_near = f64::NEG_INFINITY;
                let mut t_far = f64::INFINITY;
                for k in 0..3 {
                    let inv = 1.0 / dir[k];
                    let t1 = (min[k] - origin[k]) * inv;
                    let t2 = (max[k] - origin[k]) * inv;
                    t_near = t_near.max(t1.min(t2));
                    t_far = t_far.min(t1.max(t2));
                }
                if t_near > t_far {
                    return None;
                }
                if t_near > RAY_EPS {
                    Some(t_near)
                } else {
                    (t_far > RAY_EPS).then_some(t_far)
                }
            }
        }
    }
}

/// A set of primitives plus the maximum distance at which anything is
/// considered visible.
#[derive(Debug, Clone)]
pub struct Scene {
    pub primitives: Vec<Primitive>,
    /// Hits beyond this distance are treated as misses.
    pub extent: f64,
}

impl Scene {
    pub fn new(primitives: Vec<Primitive>, extent: f64) -> Result<Self> {
        if primitives.is_empty() {
            return Err(Error::Precondition("a scene needs at least one primitive".into()));
        }
        if !(extent > 0.0) {
            return Err(Error::Precondition(format!(
                "scene extent must be positive, got {extent}"
            )));
        }
        Ok(Self { primitives, extent })
    }

    /// Nearest hit distance within the extent.
    pub fn cast_ray(&self, origin: &Point3<f64>, dir: &Vector3<f64>) -> Option<f64> {
        let mut best = f64::INFINITY;
        for p in &self.primitives {
            if let Some(t) = p.intersect(origin, dir) {
                best = best.min(t);
            }
        }
        (best <= self.extent).then_some(best)
    }
}

/// Spinning-beam layout: one ray per (ring elevation, azimuth) pair.
#[derive(Debug, Clone)]
pub struct BeamPattern {
    /// Ring elevations in radians; positive elevations point up (−y).
    pub ring_elevations_rad: Vec<f64>,
    /// Azimuth step in radians; beams sweep the full circle from +z.
    pub azimuth_step_rad: f64,
    /// Maximum return range in meters.
    pub max_range_m: f64,
}

impl BeamPattern {
    pub fn validate(&self) -> Result<()> {
        if self.ring_elevations_rad.is_empty() {
            return Err(Error::Precondition("beam pattern needs at least one ring".into()));
        }
        if !(self.azimuth_step_rad > 0.0) || self.azimuth_step_rad > std::f64::consts::TAU {
            return Err(Error::Precondition(format!(
                "azimuth step out of range: {}",
                self.azimuth_step_rad
            )));
        }
        if !(self.max_range_m > 0.0) {
            return Err(Error::Precondition("max range must be positive".into()));
        }
        Ok(())
    }

    /// Unit beam direction in the LiDAR frame.
    pub fn direction(elevation: f64, azimuth: f64) -> Vector3<f64> {
        Vector3::new(
            elevation.cos() * azimuth.sin(),
            -elevation.sin(),
            elevation.cos() * azimuth.cos(),
        )
    }

    pub fn azimuth_count(&self) -> usize {
        (std::f64::consts::TAU / self.azimuth_step_rad).floor() as usize
    }
}

/// The simulated sensor pair: ground-truth extrinsics, camera intrinsics and
/// the LiDAR beam layout.
#[derive(Debug, Clone)]
pub struct SensorRig {
    /// Ground-truth camera-from-LiDAR transform.
    pub extrinsics: ExtrinsicParams,
    pub intrinsics: DoubleSphereIntrinsics,
    pub beams: BeamPattern,
}

impl SensorRig {
    pub fn new(
        extrinsics: ExtrinsicParams,
        intrinsics: DoubleSphereIntrinsics,
        beams: BeamPattern,
    ) -> Result<Self> {
        intrinsics.validate()?;
        beams.validate()?;
        Ok(Self {
            extrinsics,
            intrinsics,
            beams,
        })
    }

    /// A desk-scale rig: wide double-sphere fisheye, 24-ring LiDAR, and a
    /// small rotation + offset between the two sensors.
    pub fn desk_rig() -> Self {
        let extrinsics = ExtrinsicParams::new([0.035, -0.05, 0.02], [0.06, -0.10, -0.04])
            .expect("static rig parameters");
        let intrinsics =
            DoubleSphereIntrinsics::new(300.0, 300.0, 320.0, 240.0, -0.2, 0.6, 640, 480)
                .expect("static rig intrinsics");
        let rings = 24;
        let lo = -24.0_f64.to_radians();
        let hi = 6.0_f64.to_radians();
        let ring_elevations_rad = (0..rings)
            .map(|i| lo + (hi - lo) * i as f64 / (rings - 1) as f64)
            .collect();
        SensorRig {
            extrinsics,
            intrinsics,
            beams: BeamPattern {
                ring_elevations_rad,
                azimuth_step_rad: 0.75_f64.to_radians(),
                max_range_m: 35.0,
            },
        }
    }
}

/// Monotone transforms emulating the unknown scale of monodepth output.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DepthDistortion {
    None,
    /// `v ↦ gain·v + offset` (strictly monotone for gain ≠ 0).
    Affine { gain: f64, offset: f64 },
    /// `v ↦ 1/(v + c)` — the inverse-depth shape typical of monodepth.
    Inverse { c: f64 },
}

impl DepthDistortion {
    fn apply(self, v: f64) -> f64 {
        match self {
            DepthDistortion::None => v,
            DepthDistortion::Affine { gain, offset } => gain * v + offset,
            DepthDistortion::Inverse { c } => 1.0 / (v + c),
        }
    }
}

/// Sensor imperfection model for the simulators.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct NoiseConfig {
    pub seed: u64,
    /// Gaussian range noise on LiDAR returns, meters.
    pub lidar_range_sigma_m: f64,
    /// Gaussian pixel noise on normalized depth values.
    pub depth_noise_sigma: f64,
    /// Monotone distortion applied to normalized depth values.
    pub depth_distortion: DepthDistortion,
    /// Unmask this many pixels along each image border.
    pub border_mask_px: u32,
    /// Attach per-point time offsets spread over the sweep.
    pub lidar_time_offsets: bool,
    /// Sweep duration, seconds.
    pub frame_duration_s: f64,
}

impl Default for NoiseConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            lidar_range_sigma_m: 0.02,
            depth_noise_sigma: 0.0,
            depth_distortion: DepthDistortion::None,
            border_mask_px: 0,
            lidar_time_offsets: false,
            frame_duration_s: 0.1,
        }
    }
}

impl NoiseConfig {
    /// Noise-free variant, used by exactness oracles.
    pub fn noiseless(seed: u64) -> Self {
        Self {
            seed,
            lidar_range_sigma_m: 0.0,
            ..Self::default()
        }
    }
}

/// Deterministically generates a road-corridor-like scene: a ground plane
/// plus `complexity − 1` boxes spread across lateral offset and depth, so the
/// rendered depth field carries entropy.
pub fn generate_scene(seed: u64, complexity: usize) -> Result<Scene> {
    if complexity < 1 {
        return Err(Error::Precondition("scene complexity must be at least 1".into()));
    }
    let extent = 40.0;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut primitives = vec![Primitive::Plane {
        point: Point3::new(0.0, 1.55, 0.0),
        normal: Unit::new_normalize(Vector3::new(0.0, -1.0, 0.0)),
    }];
    for i in 1..complexity {
        // keep the center line clear so trajectories stay outside geometry
        let side = if rng.random_range(0..2) == 0 { -1.0 } else { 1.0 };
        if i % 3 == 0 {
            // tall roadside structure: content away from the image center
            // keeps rotation about the optical axis observable
            let cx = side * rng.random_range(2.2..5.0);
            let cz = rng.random_range(4.0..0.75 * extent);
            let hx = rng.random_range(0.4..1.0);
            let hz = rng.random_range(0.4..1.0);
            let top = rng.random_range(-5.0..-2.5);
            primitives.push(Primitive::Aabb {
                min: Point3::new(cx - hx, top, cz - hz),
                max: Point3::new(cx + hx, 1.55, cz + hz),
            });
        } else {
            let cx = side * rng.random_range(1.8..9.0);
            let cz = rng.random_range(4.0..0.75 * extent);
            let cy = rng.random_range(-0.6..1.1);
            let hx = rng.random_range(0.3..1.6);
            let hy = rng.random_range(0.3..1.6);
            let hz = rng.random_range(0.3..1.6);
            primitives.push(Primitive::Aabb {
                min: Point3::new(cx - hx, cy - hy, cz - hz),
                max: Point3::new(cx + hx, cy + hy, cz + hz),
            });
        }
    }
    Scene::new(primitives, extent)
}

/// Inverts the double-sphere projection for a pixel center; the forward model
/// lives in [`crate::camera`], this inverse exists only to drive the
/// renderer.
fn unproject(u: f64, v: f64, intr: &DoubleSphereIntrinsics) -> Option<Vector3<f64>> {
    let mx = (u - intr.cx) / intr.fx;
    let my = (v - intr.cy) / intr.fy;
    let r2 = mx * mx + my * my;
    if intr.alpha > 0.5 && r2 > 1.0 / (2.0 * intr.alpha - 1.0) {
        return None;
    }
    let mz = (1.0 - intr.alpha * intr.alpha * r2)
        / (intr.alpha * (1.0 - (2.0 * intr.alpha - 1.0) * r2).sqrt() + 1.0 - intr.alpha);
    let denom = mz * mz + r2;
    if denom < 1e-15 {
        return None;
    }
    let k = (mz * intr.xi + (mz * mz + (1.0 - intr.xi * intr.xi) * r2).sqrt()) / denom;
    let dir = Vector3::new(k * mx, k * my, k * mz - intr.xi);
    Some(dir.normalize())
}

/// Renders the raw hit-distance field seen from `camera_pose`
/// (world-from-camera): one ray per pixel center, miss pixels unmasked.
pub fn render_depth_raw(
    scene: &Scene,
    rig: &SensorRig,
    camera_pose: &RigidTransform,
) -> Result<DepthMap> {
    let intr = &rig.intrinsics;
    let (w, h) = (intr.width, intr.height);
    let origin = Point3::from(*camera_pose.translation());
    let mut values = vec![0.0_f64; w as usize * h as usize];
    let mut mask = vec![false; w as usize * h as usize];
    for y in 0..h {
        for x in 0..w {
            let Some(dir_cam) = unproject(f64::from(x) + 0.5, f64::from(y) + 0.5, intr) else {
                continue;
            };
            let dir = camera_pose.rotation() * dir_cam;
            if let Some(t) = scene.cast_ray(&origin, &dir) {
                let i = y as usize * w as usize + x as usize;
                values[i] = t;
                mask[i] = true;
            }
        }
    }
    DepthMap::new(w, h, values, mask)
}

/// Full monodepth stand-in: raw distances, normalized to [0, 1], then the
/// configured monotone distortion, pixel noise and border mask, normalized
/// again.
pub fn render_depth(
    scene: &Scene,
    rig: &SensorRig,
    camera_pose: &RigidTransform,
    noise: &NoiseConfig,
    rng: &mut ChaCha8Rng,
) -> Result<DepthMap> {
    let mut depth = render_depth_raw(scene, rig, camera_pose)?;
    depth.min_max_normalize();
    if noise.depth_distortion != DepthDistortion::None {
        depth.map_masked_values(|v| noise.depth_distortion.apply(v));
    }
    if noise.depth_noise_sigma > 0.0 {
        let sigma = noise.depth_noise_sigma;
        let w = depth.width() as usize;
        let h = depth.height() as usize;
        let mut noisy = depth.values().to_vec();
        for (i, m) in depth.mask().iter().enumerate() {
            if *m {
                let g: f64 = rng.sample(StandardNormal);
                noisy[i] += sigma * g;
            }
        }
        depth = DepthMap::new(w as u32, h as u32, noisy, depth.mask().to_vec())?;
    }
    if noise.border_mask_px > 0 {
        let b = noise.border_mask_px;
        let (w, h) = (depth.width(), depth.height());
        let mut mask = depth.mask().to_vec();
        for y in 0..h {
            for x in 0..w {
                if x < b || y < b || x >= w - b || y >= h - b {
                    mask[y as usize * w as usize + x as usize] = false;
                }
            }
        }
        depth = DepthMap::new(w, h, depth.values().to_vec(), mask)?;
    }
    depth.min_max_normalize();
    Ok(depth)
}

/// Simulates one sweep from `lidar_pose` (world-from-LiDAR). Points are
/// returned in the LiDAR frame; first hits only, within max range, with
/// optional Gaussian range noise and per-point time offsets.
pub fn simulate_lidar(
    scene: &Scene,
    rig: &SensorRig,
    lidar_pose: &RigidTransform,
    noise: &NoiseConfig,
    rng: &mut ChaCha8Rng,
) -> Result<PointCloud> {
    let beams = &rig.beams;
    let origin = Point3::from(*lidar_pose.translation());
    let n_az = beams.azimuth_count();
    let mut points = Vec::new();
    let mut offsets = Vec::new();
    for &elev in &beams.ring_elevations_rad {
        for k in 0..n_az {
            let azimuth = k as f64 * beams.azimuth_step_rad;
            let dir_l = BeamPattern::direction(elev, azimuth);
            let dir_w = lidar_pose.rotation() * dir_l;
            let Some(t) = scene.cast_ray(&origin, &dir_w) else {
                continue;
            };
            if t > beams.max_range_m {
                continue;
            }
            let range = if noise.lidar_range_sigma_m > 0.0 {
                let g: f64 = rng.sample(StandardNormal);
                (t + noise.lidar_range_sigma_m * g).max(0.0)
            } else {
                t
            };
            points.push(Point3::from(dir_l * range));
            if noise.lidar_time_offsets {
                offsets.push(azimuth / std::f64::consts::TAU * noise.frame_duration_s);
            }
        }
    }
    PointCloud::with_time_offsets(points, noise.lidar_time_offsets.then_some(offsets))
}

/// Generates one frame per trajectory pose. Poses place the LiDAR in the
/// world; the camera rides at the rig's ground-truth extrinsics.
pub fn make_frameset(
    scene: &Scene,
    rig: &SensorRig,
    trajectory: &[RigidTransform],
    noise: &NoiseConfig,
) -> Result<FrameSet> {
    if trajectory.is_empty() {
        return Err(Error::Precondition("trajectory must contain at least one pose".into()));
    }
    let cam_from_lidar = params_to_transform(&rig.extrinsics);
    let lidar_from_cam = cam_from_lidar.inverse();
    let mut frames = Vec::with_capacity(trajectory.len());
    for (i, lidar_pose) in trajectory.iter().enumerate() {
        let mut rng = frame_rng(noise.seed, i);
        let camera_pose = lidar_pose.compose(&lidar_from_cam);
        let depth = render_depth(scene, rig, &camera_pose, noise, &mut rng)?;
        let cloud = simulate_lidar(scene, rig, lidar_pose, noise, &mut rng)?;
        frames.push(Frame { depth, cloud });
    }
    Ok(FrameSet::new(frames))
}

fn frame_rng(seed: u64, frame_index: usize) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(
        seed ^ (frame_index as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15),
    )
}

/// A gently weaving forward trajectory for the LiDAR, deterministic per seed.
pub fn make_trajectory(seed: u64, poses: usize, spacing_m: f64) -> Vec<RigidTransform> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(0xA5A5));
    (0..poses)
        .map(|i| {
            let z = i as f64 * spacing_m;
            let x = 0.35 * (0.8 * i as f64).sin() + rng.random_range(-0.05..0.05);
            let yaw = 0.02 * (0.6 * i as f64).cos() + rng.random_range(-0.004..0.004);
            RigidTransform::new(
                Rotation3::from_euler_angles(0.0, yaw, 0.0),
                Vector3::new(x, 0.0, z),
            )
        })
        .collect()
}

/// An arbitrarily long trajectory that patrols back and forth inside the
/// content-rich part of a generated corridor, so every window of a long
/// sequence sees comparable structure. Deterministic per seed.
pub fn patrol_trajectory(seed: u64, poses: usize) -> Vec<RigidTransform> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(0x7A7A));
    let phase: f64 = rng.random_range(0.0..std::f64::consts::TAU);
    (0..poses)
        .map(|i| {
            let s = i as f64;
            let z = 8.0 + 6.5 * (0.055 * s + phase).sin();
            let x = 0.6 * (0.21 * s).sin() + rng.random_range(-0.05..0.05);
            let yaw = 0.06 * (0.13 * s).cos() + rng.random_range(-0.005..0.005);
            RigidTransform::new(
                Rotation3::from_euler_angles(0.0, yaw, 0.0),
                Vector3::new(x, 0.0, z),
            )
        })
        .collect()
}
