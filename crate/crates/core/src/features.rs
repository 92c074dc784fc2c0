//! Paired depth features for MI estimation.
//!
//! For every LiDAR point that lands on a masked depth pixel after transform
//! and projection, the pipeline pairs the pixel's (relative) depth value with
//! the point's euclidean range measured in the LiDAR frame. The depth map is
//! sampled at the pixel containing the projection — no interpolation, since
//! interpolating across a depth discontinuity invents depths that exist on no
//! surface and the histogram objective needs no smooth sampling.

use nalgebra::{Matrix3, Point3, Rotation3, Vector3};

use crate::camera::{self, DoubleSphereIntrinsics};
use crate::geometry::{params_to_transform, ExtrinsicParams};
use crate::{Error, Result};

/// A relative depth image with a per-pixel validity mask.
///
/// Values are unitless and only assumed monotone in metric depth. Loaders and
/// the synthetic renderer min-max normalize masked values to [0, 1]; the type
/// itself does not require it.
#[derive(Debug, Clone, PartialEq)]
pub struct DepthMap {
    width: u32,
    height: u32,
    values: Vec<f64>,
    mask: Vec<bool>,
}

impl DepthMap {
    /// Row-major values and mask; `values[y * width + x]`.
    ///
    /// Masked values must be finite.
    pub fn new(width: u32, height: u32, values: Vec<f64>, mask: Vec<bool>) -> Result<Self> {
        let n = width as usize * height as usize;
        if values.len() != n || mask.len() != n {
            return Err(Error::Dimension(format!(
                "depth map {width}x{height} needs {n} values, got {} values / {} mask entries",
                values.len(),
                mask.len()
            )));
        }
        for (v, m) in values.iter().zip(&mask) {
            if *m && !v.is_finite() {
                return Err(Error::InvalidParameter(format!(
                    "masked depth value {v} is not finite"
                )));
            }
        }
        Ok(Self {
            width,
            height,
            values,
            mask,
        })
    }

    /// A fully-masked constant map (test helper).
    pub fn constant(width: u32, height: u32, value: f64) -> Result<Self> {
        let n = width as usize * height as usize;
        Self::new(width, height, vec![value; n], vec![true; n])
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn is_masked(&self, x: u32, y: u32) -> bool {
        self.mask[y as usize * self.width as usize + x as usize]
    }

    pub fn value(&self, x: u32, y: u32) -> f64 {
        self.values[y as usize * self.width as usize + x as usize]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    pub fn masked_count(&self) -> usize {
        self.mask.iter().filter(|m| **m).count()
    }

    /// Min-max normalizes masked values to [0, 1] in place.
    ///
    /// A degenerate map (all masked values equal) maps to 0.5 everywhere.
    pub fn min_max_normalize(&mut self) {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for (v, m) in self.values.iter().zip(&self.mask) {
            if *m {
                lo = lo.min(*v);
                hi = hi.max(*v);
            }
        }
        if !lo.is_finite() || !hi.is_finite() {
            return; // nothing masked
        }
        let span = hi - lo;
        for (v, m) in self.values.iter_mut().zip(&self.mask) {
            if *m {
                *v = if span > 0.0 { (*v - lo) / span } else { 0.5 };
            }
        }
    }

    /// Applies `f` to every masked value (monotone distortions in tests and
    /// the monodepth emulation).
    pub fn map_masked_values(&mut self, f: impl Fn(f64) -> f64) {
        for (v, m) in self.values.iter_mut().zip(&self.mask) {
            if *m {
                *v = f(*v);
            }
        }
    }
}

/// LiDAR points in the LiDAR frame, optionally with per-point time offsets
/// (seconds within the sweep) for motion compensation.
#[derive(Debug, Clone, PartialEq)]
pub struct PointCloud {
    points: Vec<Point3<f64>>,
    time_offsets: Option<Vec<f64>>,
}

impl PointCloud {
    pub fn new(points: Vec<Point3<f64>>) -> Result<Self> {
        Self::with_time_offsets(points, None)
    }

    pub fn with_time_offsets(
        points: Vec<Point3<f64>>,
        time_offsets: Option<Vec<f64>>,
    ) -> Result<Self> {
        for p in &points {
            if !(p.x.is_finite() && p.y.is_finite() && p.z.is_finite()) {
                return Err(Error::InvalidParameter(format!(
                    "non-finite point coordinate in ({}, {}, {})",
                    p.x, p.y, p.z
                )));
            }
        }
        if let Some(offsets) = &time_offsets {
            if offsets.len() != points.len() {
                return Err(Error::Dimension(format!(
                    "{} time offsets for {} points",
                    offsets.len(),
                    points.len()
                )));
            }
        }
        Ok(Self {
            points,
            time_offsets,
        })
    }

    pub fn points(&self) -> &[Point3<f64>] {
        &self.points
    }

    pub fn time_offsets(&self) -> Option<&[f64]> {
        self.time_offsets.as_deref()
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// One time-synchronized depth-map / point-cloud pair.
#[derive(Debug, Clone)]
pub struct Frame {
    pub depth: DepthMap,
    pub cloud: PointCloud,
}

/// The optimization input: N synchronized frames.
#[derive(Debug, Clone, Default)]
pub struct FrameSet {
    pub frames: Vec<Frame>,
}

impl FrameSet {
    pub fn new(frames: Vec<Frame>) -> Self {
        Self { frames }
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }
}

/// Matched per-sample features: the depth-map value and the LiDAR range of
/// each point that projected onto a masked pixel, plus the pixel it hit.
#[derive(Debug, Clone, PartialEq)]
pub struct FeaturePairs {
    pub depth: Vec<f64>,
    pub range: Vec<f64>,
    pub pixels: Vec<(u32, u32)>,
}

impl FeaturePairs {
    pub fn len(&self) -> usize {
        self.depth.len()
    }

    pub fn is_empty(&self) -> bool {
        self.depth.is_empty()
    }
}

/// Euclidean distance of each point to the LiDAR origin, order preserved.
pub fn range_features(cloud: &PointCloud) -> Vec<f64> {
    cloud.points.iter().map(|p| p.coords.norm()).collect()
}

/// Extracts matched (depth, range) pairs for one frame.
///
/// Each LiDAR point is transformed by `params`, projected through `intr`, and
/// kept when the projection is valid and the containing pixel is masked. The
/// range feature is measured in the LiDAR frame, before the transform.
///
/// Returns [`Error::EmptyOverlap`] when no pair survives.
pub fn extract_feature_pairs(
    depth: &DepthMap,
    cloud: &PointCloud,
    params: &ExtrinsicParams,
    intr: &DoubleSphereIntrinsics,
) -> Result<FeaturePairs> {
    let t = params_to_transform(params);
    let mut pairs = FeaturePairs {
        depth: Vec::new(),
        range: Vec::new(),
        pixels: Vec::new(),
    };
    for p in &cloud.points {
        let cam = t.transform_point(p);
        let px = camera::project(&cam, intr);
        if !px.valid {
            continue;
        }
        // valid ⇒ 0 ≤ u < width, so the containing pixel is in range
        let x = px.u as u32;
        let y = px.v as u32;
        if !depth.is_masked(x, y) {
            continue;
        }
        pairs.depth.push(depth.value(x, y));
        pairs.range.push(p.coords.norm());
        pairs.pixels.push((x, y));
    }
    if pairs.is_empty() {
        return Err(Error::EmptyOverlap);
    }
    Ok(pairs)
}

/// De-skews a point cloud under a constant-velocity motion model.
///
/// `ego_velocity` is `[vx, vy, vz, wx, wy, wz]` (m/s, rad/s) of the sensor.
/// Per-point time offsets count seconds from sweep start; points are mapped
/// into the sensor pose at sweep end (`t = frame_duration`), removing the
/// apparent motion accumulated over the remainder of the sweep. For a pure
/// forward velocity v, a point with offset τ shifts by −v·(duration − τ).
pub fn motion_compensate(
    cloud: &PointCloud,
    ego_velocity: [f64; 6],
    frame_duration: f64,
) -> Result<PointCloud> {
    let offsets = cloud.time_offsets().ok_or_else(|| {
        Error::Precondition("motion compensation needs per-point time offsets".into())
    })?;
    if !frame_duration.is_finite() || frame_duration < 0.0 {
        return Err(Error::Precondition(format!(
            "frame duration must be a non-negative number of seconds, got {frame_duration}"
        )));
    }
    let linear = Vector3::new(ego_velocity[0], ego_velocity[1], ego_velocity[2]);
    let angular = Vector3::new(ego_velocity[3], ego_velocity[4], ego_velocity[5]);

    let points = cloud
        .points
        .iter()
        .zip(offsets)
        .map(|(p, &tau)| {
            let dt = tau - frame_duration;
            let (rot, trans) = twist_exp(&(angular * dt), &(linear * dt));
            rot * p + trans
        })
        .collect();
    PointCloud::with_time_offsets(points, Some(offsets.to_vec()))
}

/// Exponential of a constant twist: rotation `exp([ω]×)` and the integrated
/// translation `V(ω)·v` with `V = I + (1−cosθ)/θ²·[ω]× + (θ−sinθ)/θ³·[ω]×²`.
fn twist_exp(omega: &Vector3<f64>, v: &Vector3<f64>) -> (Rotation3<f64>, Vector3<f64>) {
    let theta = omega.norm();
    let rot = Rotation3::from_scaled_axis(*omega);
    if theta < 1e-12 {
        return (rot, *v);
    }
    let hat = Matrix3::new(
        0.0, -omega.z, omega.y, //
        omega.z, 0.0, -omega.x, //
        -omega.y, omega.x, 0.0,
    );
    let theta2 = theta * theta;
    let vmat = Matrix3::identity()
        + hat * ((1.0 - theta.cos()) / theta2)
        + (hat * hat) * ((theta - theta.sin()) / (theta2 * theta));
    (rot, vmat * v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn range_feature_345_triangle() {
        let cloud = PointCloud::new(vec![Point3::new(3.0, 4.0, 0.0)]).unwrap();
        assert_eq!(range_features(&cloud), vec![5.0]);
    }

    #[test]
    fn range_feature_origin_is_zero() {
        let cloud = PointCloud::new(vec![Point3::origin()]).unwrap();
        assert_eq!(range_features(&cloud), vec![0.0]);
    }

    #[test]
    fn cloud_behind_camera_yields_empty_overlap() {
        let depth = DepthMap::constant(64, 64, 0.5).unwrap();
        let cloud = PointCloud::new(vec![
            Point3::new(0.0, 0.0, -2.0),
            Point3::new(0.5, 0.1, -4.0),
        ])
        .unwrap();
        let intr = DoubleSphereIntrinsics::pinhole(50.0, 50.0, 32.0, 32.0, 64, 64).unwrap();
        let err = extract_feature_pairs(&depth, &cloud, &ExtrinsicParams::identity(), &intr)
            .unwrap_err();
        assert!(matches!(err, Error::EmptyOverlap));
    }

    #[test]
    fn single_axis_point_pairs_with_depth_value() {
        let depth = DepthMap::constant(64, 64, 0.5).unwrap();
        let cloud = PointCloud::new(vec![Point3::new(0.0, 0.0, 2.0)]).unwrap();
        let intr = DoubleSphereIntrinsics::pinhole(50.0, 50.0, 32.0, 32.0, 64, 64).unwrap();
        let pairs =
            extract_feature_pairs(&depth, &cloud, &ExtrinsicParams::identity(), &intr).unwrap();
        assert_eq!(pairs.depth, vec![0.5]);
        assert_eq!(pairs.range, vec![2.0]);
        assert_eq!(pairs.pixels, vec![(32, 32)]);
    }

    #[test]
    fn unmasked_pixels_are_skipped() {
        let n = 64 * 64;
        let depth = DepthMap::new(64, 64, vec![0.5; n], vec![false; n]).unwrap();
        let cloud = PointCloud::new(vec![Point3::new(0.0, 0.0, 2.0)]).unwrap();
        let intr = DoubleSphereIntrinsics::pinhole(50.0, 50.0, 32.0, 32.0, 64, 64).unwrap();
        let err = extract_feature_pairs(&depth, &cloud, &ExtrinsicParams::identity(), &intr)
            .unwrap_err();
        assert!(matches!(err, Error::EmptyOverlap));
    }

    #[test]
    fn depth_map_dimension_mismatch_rejected() {
        assert!(DepthMap::new(4, 4, vec![0.0; 15], vec![true; 16]).is_err());
    }

    #[test]
    fn masked_nan_rejected_unmasked_allowed() {
        let mut values = vec![0.1; 4];
        values[2] = f64::NAN;
        assert!(DepthMap::new(2, 2, values.clone(), vec![true; 4]).is_err());
        let mask = vec![true, true, false, true];
        assert!(DepthMap::new(2, 2, values, mask).is_ok());
    }

    #[test]
    fn normalize_degenerate_map_to_half() {
        let mut d = DepthMap::constant(4, 4, 7.0).unwrap();
        d.min_max_normalize();
        assert!(d.values().iter().all(|v| *v == 0.5));
    }

    #[test]
    fn normalize_spans_unit_interval() {
        let mut d = DepthMap::new(2, 1, vec![5.0, 9.0], vec![true, true]).unwrap();
        d.min_max_normalize();
        assert_eq!(d.values(), &[0.0, 1.0]);
    }

    #[test]
    fn zero_velocity_deskew_is_identity() {
        let points = vec![Point3::new(1.0, 2.0, 3.0), Point3::new(-0.5, 0.0, 4.0)];
        let cloud =
            PointCloud::with_time_offsets(points.clone(), Some(vec![0.02, 0.07])).unwrap();
        let out = motion_compensate(&cloud, [0.0; 6], 0.1).unwrap();
        for (a, b) in out.points().iter().zip(&points) {
            assert_relative_eq!((a - b).norm(), 0.0, epsilon = 1e-15);
        }
    }

    #[test]
    fn forward_motion_shifts_against_velocity() {
        // 10 m/s forward, offset 0.05 s into a 0.1 s sweep: the remaining
        // motion is 0.5 m, removed from the point.
        let cloud = PointCloud::with_time_offsets(
            vec![Point3::new(0.0, 0.0, 10.0)],
            Some(vec![0.05]),
        )
        .unwrap();
        let out = motion_compensate(&cloud, [10.0, 0.0, 0.0, 0.0, 0.0, 0.0], 0.1).unwrap();
        let p = out.points()[0];
        assert_relative_eq!(p.x, -0.5, epsilon = 1e-12);
        assert_relative_eq!(p.z, 10.0, epsilon = 1e-12);
    }

    #[test]
    fn deskew_without_offsets_is_a_precondition_error() {
        let cloud = PointCloud::new(vec![Point3::new(1.0, 0.0, 0.0)]).unwrap();
        let err = motion_compensate(&cloud, [1.0, 0.0, 0.0, 0.0, 0.0, 0.0], 0.1).unwrap_err();
        assert!(matches!(err, Error::Precondition(_)));
    }
}
