//! Rigid-body parameterization of the camera-from-LiDAR transform.
//!
//! The six calibration parameters are three fixed-axis rotation angles and a
//! translation. The rotation convention is fixed-axis X-Y-Z: apply the
//! rotation about x first, then y, then z, i.e. `R = Rz(θz)·Ry(θy)·Rx(θx)`.
//! Angles are radians internally; degrees appear only at CLI and file
//! boundaries.

use nalgebra::{Matrix4, Point3, Rotation3, Vector3};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Six-parameter extrinsic calibration: rotation angles (radians) and
/// translation (meters) of the camera-from-LiDAR transform.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExtrinsicParams {
    pub theta_x: f64,
    pub theta_y: f64,
    pub theta_z: f64,
    pub t_x: f64,
    pub t_y: f64,
    pub t_z: f64,
}

/// Wrap an angle into (−π, π].
fn wrap_angle(a: f64) -> f64 {
    let mut a = a % std::f64::consts::TAU;
    if a > std::f64::consts::PI {
        a -= std::f64::consts::TAU;
    } else if a <= -std::f64::consts::PI {
        a += std::f64::consts::TAU;
    }
    a
}

impl ExtrinsicParams {
    /// Builds a parameter set, wrapping rotation angles into (−π, π].
    ///
    /// Fails if any component is non-finite.
    pub fn new(rotation_rad: [f64; 3], translation_m: [f64; 3]) -> Result<Self> {
        for v in rotation_rad.iter().chain(translation_m.iter()) {
            if !v.is_finite() {
                return Err(Error::InvalidParameter(format!(
                    "non-finite extrinsic component {v}"
                )));
            }
        }
        Ok(Self {
            theta_x: wrap_angle(rotation_rad[0]),
            theta_y: wrap_angle(rotation_rad[1]),
            theta_z: wrap_angle(rotation_rad[2]),
            t_x: translation_m[0],
            t_y: translation_m[1],
            t_z: translation_m[2],
        })
    }

    /// The identity calibration (zero rotation, zero translation).
    pub fn identity() -> Self {
        Self {
            theta_x: 0.0,
            theta_y: 0.0,
            theta_z: 0.0,
            t_x: 0.0,
            t_y: 0.0,
            t_z: 0.0,
        }
    }

    /// Components in the order `[θx, θy, θz, tx, ty, tz]`.
    pub fn to_array(self) -> [f64; 6] {
        [
            self.theta_x,
            self.theta_y,
            self.theta_z,
            self.t_x,
            self.t_y,
            self.t_z,
        ]
    }

    /// Inverse of [`Self::to_array`]; validates and wraps like [`Self::new`].
    pub fn from_array(a: [f64; 6]) -> Result<Self> {
        Self::new([a[0], a[1], a[2]], [a[3], a[4], a[5]])
    }

    pub fn rotation_rad(&self) -> [f64; 3] {
        [self.theta_x, self.theta_y, self.theta_z]
    }

    pub fn translation_m(&self) -> [f64; 3] {
        [self.t_x, self.t_y, self.t_z]
    }

    /// Composes `self` with a perturbation applied on the LiDAR side:
    /// `T_out = T_self · T_delta`.
    ///
    /// Right-composition keeps the translation unchanged for rotation-only
    /// perturbations, and the rotation error between `self` and the result
    /// equals the rotation angle of `delta` (geodesic distance is
    /// bi-invariant).
    pub fn perturbed_by(&self, delta: &ExtrinsicParams) -> ExtrinsicParams {
        let t = params_to_transform(self).compose(&params_to_transform(delta));
        params_from_transform(&t)
    }
}

/// Rigid camera-from-LiDAR transform with an orthonormal rotation block.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RigidTransform {
    rotation: Rotation3<f64>,
    translation: Vector3<f64>,
}

impl RigidTransform {
    pub fn identity() -> Self {
        Self {
            rotation: Rotation3::identity(),
            translation: Vector3::zeros(),
        }
    }

    pub fn new(rotation: Rotation3<f64>, translation: Vector3<f64>) -> Self {
        Self {
            rotation,
            translation,
        }
    }

    /// Builds from a 4×4 homogeneous matrix, checking that the rotation block
    /// is orthonormal (‖RᵀR − I‖∞ < 1e−9, det ≈ 1) and the bottom row is
    /// exactly `[0, 0, 0, 1]`.
    pub fn from_matrix(m: &Matrix4<f64>) -> Result<Self> {
        if m.row(3) != nalgebra::RowVector4::new(0.0, 0.0, 0.0, 1.0) {
            return Err(Error::InvalidParameter(
                "homogeneous bottom row is not [0, 0, 0, 1]".into(),
            ));
        }
        let r = m.fixed_view::<3, 3>(0, 0).into_owned();
        let ortho_err = (r.transpose() * r - nalgebra::Matrix3::identity())
            .iter()
            .fold(0.0_f64, |acc, v| acc.max(v.abs()));
        let det = r.determinant();
        if ortho_err >= 1e-9 || (det - 1.0).abs() >= 1e-9 {
            return Err(Error::InvalidParameter(format!(
                "rotation block not orthonormal (orthogonality error {ortho_err:.2e}, det {det})"
            )));
        }
        Ok(Self {
            rotation: Rotation3::from_matrix_unchecked(r),
            translation: m.fixed_view::<3, 1>(0, 3).into_owned(),
        })
    }

    pub fn rotation(&self) -> &Rotation3<f64> {
        &self.rotation
    }

    pub fn translation(&self) -> &Vector3<f64> {
        &self.translation
    }

    /// The 4×4 homogeneous matrix.
    pub fn matrix(&self) -> Matrix4<f64> {
        let mut m = Matrix4::identity();
        m.fixed_view_mut::<3, 3>(0, 0).copy_from(self.rotation.matrix());
        m.fixed_view_mut::<3, 1>(0, 3).copy_from(&self.translation);
        m
    }

    pub fn transform_point(&self, p: &Point3<f64>) -> Point3<f64> {
        self.rotation * p + self.translation
    }

    /// `self · other` (apply `other` first).
    pub fn compose(&self, other: &RigidTransform) -> RigidTransform {
        RigidTransform {
            rotation: self.rotation * other.rotation,
            translation: self.rotation * other.translation + self.translation,
        }
    }

    pub fn inverse(&self) -> RigidTransform {
        let inv_rot = self.rotation.inverse();
        RigidTransform {
            rotation: inv_rot,
            translation: -(inv_rot * self.translation),
        }
    }
}

/// Builds the rigid transform `R = Rz(θz)·Ry(θy)·Rx(θx)` with translation
/// `(tx, ty, tz)`.
pub fn params_to_transform(params: &ExtrinsicParams) -> RigidTransform {
    // nalgebra's (roll, pitch, yaw) is exactly the fixed-axis X-Y-Z
    // composition Rz·Ry·Rx.
    RigidTransform {
        rotation: Rotation3::from_euler_angles(params.theta_x, params.theta_y, params.theta_z),
        translation: Vector3::new(params.t_x, params.t_y, params.t_z),
    }
}

/// Recovers `(θx, θy, θz, t)` from a rigid transform.
///
/// Unique away from the θy = ±π/2 gimbal singularity; at the singularity one
/// valid decomposition is returned.
pub fn params_from_transform(t: &RigidTransform) -> ExtrinsicParams {
    let (roll, pitch, yaw) = t.rotation.euler_angles();
    ExtrinsicParams {
        theta_x: wrap_angle(roll),
        theta_y: wrap_angle(pitch),
        theta_z: wrap_angle(yaw),
        t_x: t.translation.x,
        t_y: t.translation.y,
        t_z: t.translation.z,
    }
}

/// Applies `p' = R·p + t` to every point; order and length preserved.
pub fn transform_points(t: &RigidTransform, points: &[Point3<f64>]) -> Vec<Point3<f64>> {
    points.iter().map(|p| t.transform_point(p)).collect()
}

/// Geodesic angle between the rotations of two parameter sets, in degrees.
///
/// Equals `arccos((trace(R_a·R_bᵀ) − 1)/2)`, always in [0, 180]. The cosine
/// is clamped: rounding can push the trace of a near-identity product past 3,
/// where a bare `acos` would return NaN.
pub fn rotation_error_deg(a: &ExtrinsicParams, b: &ExtrinsicParams) -> f64 {
    let ra = params_to_transform(a).rotation;
    let rb = params_to_transform(b).rotation;
    let rel = ra.matrix() * rb.matrix().transpose();
    let cos = ((rel.trace() - 1.0) / 2.0).clamp(-1.0, 1.0);
    cos.acos().to_degrees()
}

/// Samples a rotation-only perturbation of exactly `radius_deg` about an axis
/// uniform on the unit sphere. Translation components are zero.
pub fn sample_rotation_perturbation<R: Rng>(radius_deg: f64, rng: &mut R) -> ExtrinsicParams {
    assert!(radius_deg >= 0.0, "perturbation radius must be >= 0");
    // Uniform direction: uniform z in [-1, 1], uniform azimuth.
    let z: f64 = rng.random_range(-1.0..=1.0);
    let phi: f64 = rng.random_range(0.0..std::f64::consts::TAU);
    let s = (1.0 - z * z).max(0.0).sqrt();
    let axis = Vector3::new(s * phi.cos(), s * phi.sin(), z);
    let rot = Rotation3::from_scaled_axis(axis * radius_deg.to_radians());
    let (roll, pitch, yaw) = rot.euler_angles();
    ExtrinsicParams {
        theta_x: wrap_angle(roll),
        theta_y: wrap_angle(pitch),
        theta_z: wrap_angle(yaw),
        t_x: 0.0,
        t_y: 0.0,
        t_z: 0.0,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn zero_params_give_identity() {
        let t = params_to_transform(&ExtrinsicParams::identity());
        assert_eq!(t.matrix(), Matrix4::identity());
    }

    #[test]
    fn quarter_turn_about_z() {
        let p = ExtrinsicParams::new([0.0, 0.0, std::f64::consts::FRAC_PI_2], [0.0; 3]).unwrap();
        let t = params_to_transform(&p);
        let q = t.transform_point(&Point3::new(1.0, 0.0, 0.0));
        assert_relative_eq!(q.x, 0.0, epsilon = 1e-12);
        assert_relative_eq!(q.y, 1.0, epsilon = 1e-12);
        assert_relative_eq!(q.z, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn non_finite_component_rejected() {
        assert!(ExtrinsicParams::new([f64::NAN, 0.0, 0.0], [0.0; 3]).is_err());
        assert!(ExtrinsicParams::new([0.0; 3], [0.0, f64::INFINITY, 0.0]).is_err());
    }

    #[test]
    fn rotation_angles_wrap_into_half_open_pi() {
        let p = ExtrinsicParams::new([3.5, -3.5, std::f64::consts::PI], [0.0; 3]).unwrap();
        assert!(p.theta_x > -std::f64::consts::PI && p.theta_x <= std::f64::consts::PI);
        assert!(p.theta_y > -std::f64::consts::PI && p.theta_y <= std::f64::consts::PI);
        assert_relative_eq!(p.theta_z, std::f64::consts::PI);
    }

    #[test]
    fn identity_transform_preserves_cloud() {
        let cloud = vec![Point3::new(1.0, 2.0, 3.0), Point3::new(-4.0, 0.5, 9.0)];
        assert_eq!(transform_points(&RigidTransform::identity(), &cloud), cloud);
    }

    #[test]
    fn pure_translation_moves_origin() {
        let p = ExtrinsicParams::new([0.0; 3], [1.0, 0.0, 0.0]).unwrap();
        let t = params_to_transform(&p);
        let q = t.transform_point(&Point3::origin());
        assert_eq!(q, Point3::new(1.0, 0.0, 0.0));
    }

    #[test]
    fn rotation_error_zero_for_equal_params() {
        let p = ExtrinsicParams::new([0.1, -0.2, 0.3], [1.0, 2.0, 3.0]).unwrap();
        assert_eq!(rotation_error_deg(&p, &p), 0.0);
    }

    #[test]
    fn rotation_error_single_axis_yaw() {
        let a = ExtrinsicParams::identity();
        let b = ExtrinsicParams::new([0.0, 0.0, 5.0_f64.to_radians()], [0.0; 3]).unwrap();
        assert_relative_eq!(rotation_error_deg(&a, &b), 5.0, epsilon = 1e-9);
    }

    #[test]
    fn zero_radius_perturbation_is_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let d = sample_rotation_perturbation(0.0, &mut rng);
        assert_eq!(rotation_error_deg(&ExtrinsicParams::identity(), &d), 0.0);
        assert_eq!(d.translation_m(), [0.0; 3]);
    }

    #[test]
    fn perturbation_radius_is_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for _ in 0..32 {
            let d = sample_rotation_perturbation(5.0, &mut rng);
            assert_relative_eq!(
                rotation_error_deg(&ExtrinsicParams::identity(), &d),
                5.0,
                epsilon = 1e-6
            );
            assert_eq!(d.translation_m(), [0.0; 3]);
        }
    }

    #[test]
    fn perturbed_by_keeps_translation_and_radius() {
        let base = ExtrinsicParams::new([0.05, -0.1, 0.2], [0.4, -0.3, 0.9]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let delta = sample_rotation_perturbation(7.0, &mut rng);
        let moved = base.perturbed_by(&delta);
        assert_relative_eq!(rotation_error_deg(&base, &moved), 7.0, epsilon = 1e-6);
        for (a, b) in moved.translation_m().iter().zip(base.translation_m()) {
            assert_relative_eq!(*a, b, epsilon = 1e-12);
        }
    }

    #[test]
    fn from_matrix_rejects_bad_bottom_row() {
        let mut m = Matrix4::identity();
        m[(3, 0)] = 1e-3;
        assert!(RigidTransform::from_matrix(&m).is_err());
    }

    #[test]
    fn from_matrix_rejects_non_orthonormal_rotation() {
        let mut m = Matrix4::identity();
        m[(0, 0)] = 1.1;
        assert!(RigidTransform::from_matrix(&m).is_err());
    }
}
