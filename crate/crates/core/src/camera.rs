//! Double-sphere fisheye projection.
//!
//! Projects 3D points in the camera frame to continuous pixel coordinates.
//! With ξ = 0 and α = 0 the model degenerates to an ideal pinhole, which the
//! intrinsics file exposes as the `"pinhole"` alias. Invalid projections
//! (behind the model's validity cone, vanishing denominator, or outside the
//! image) are flagged, not errored: the MI statistics must only ever see
//! genuine co-observations.

use nalgebra::Point3;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

const DENOM_EPS: f64 = 1e-9;

/// Double-sphere camera parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DoubleSphereIntrinsics {
    /// Focal lengths in pixels.
    pub fx: f64,
    pub fy: f64,
    /// Principal point in pixels.
    pub cx: f64,
    pub cy: f64,
    /// Offset of the first sphere center.
    pub xi: f64,
    /// Blending between the second sphere and the shifted pinhole, in [0, 1).
    pub alpha: f64,
    /// Image size in pixels.
    pub width: u32,
    pub height: u32,
}

impl DoubleSphereIntrinsics {
    pub fn new(
        fx: f64,
        fy: f64,
        cx: f64,
        cy: f64,
        xi: f64,
        alpha: f64,
        width: u32,
        height: u32,
    ) -> Result<Self> {
        let intr = Self {
            fx,
            fy,
            cx,
            cy,
            xi,
            alpha,
            width,
            height,
        };
        intr.validate()?;
        Ok(intr)
    }

    /// Ideal pinhole: ξ = 0, α = 0.
    pub fn pinhole(fx: f64, fy: f64, cx: f64, cy: f64, width: u32, height: u32) -> Result<Self> {
        Self::new(fx, fy, cx, cy, 0.0, 0.0, width, height)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("fx", self.fx),
            ("fy", self.fy),
            ("cx", self.cx),
            ("cy", self.cy),
            ("xi", self.xi),
            ("alpha", self.alpha),
        ] {
            if !v.is_finite() {
                return Err(Error::InvalidParameter(format!("intrinsic {name} = {v}")));
            }
        }
        if self.fx <= 0.0 || self.fy <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "focal lengths must be positive (fx {}, fy {})",
                self.fx, self.fy
            )));
        }
        if !(0.0..1.0).contains(&self.alpha) {
            return Err(Error::InvalidParameter(format!(
                "alpha must lie in [0, 1), got {}",
                self.alpha
            )));
        }
        if self.width == 0 || self.height == 0 {
            return Err(Error::InvalidParameter("image size must be positive".into()));
        }
        Ok(())
    }
}

/// A projection result: continuous pixel coordinates plus a validity flag.
///
/// `valid` guarantees `0 ≤ u < width` and `0 ≤ v < height` with finite
/// coordinates. When invalid because of model geometry (rather than image
/// bounds) the coordinates are NaN.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PixelPoint {
    pub u: f64,
    pub v: f64,
    pub valid: bool,
}

impl PixelPoint {
    fn invalid() -> Self {
        Self {
            u: f64::NAN,
            v: f64::NAN,
            valid: false,
        }
    }
}

/// Projects a camera-frame point through the double-sphere model.
///
/// With d1 = ‖p‖ and d2 = ‖(x, y, ξ·d1 + z)‖ the pixel is
/// `u = fx·x/denom + cx`, `v = fy·y/denom + cy` where
/// `denom = α·d2 + (1−α)·(ξ·d1 + z)`. The point is invalid when it lies
/// behind the validity cone `z ≤ −w2·d1`, when the denominator vanishes, or
/// when the pixel falls outside the image.
pub fn project(point: &Point3<f64>, intr: &DoubleSphereIntrinsics) -> PixelPoint {
    let (x, y, z) = (point.x, point.y, point.z);
    debug_assert!(x.is_finite() && y.is_finite() && z.is_finite());

    let r2 = x * x + y * y;
    let d1 = (r2 + z * z).sqrt();

    let w1 = if intr.alpha <= 0.5 {
        intr.alpha / (1.0 - intr.alpha)
    } else {
        (1.0 - intr.alpha) / intr.alpha
    };
    let w2 = (w1 + intr.xi) / (2.0 * w1 * intr.xi + intr.xi * intr.xi + 1.0).sqrt();
    if z <= -w2 * d1 {
        return PixelPoint::invalid();
    }

    let xi_d1_z = intr.xi * d1 + z;
    let d2 = (r2 + xi_d1_z * xi_d1_z).sqrt();
    let denom = intr.alpha * d2 + (1.0 - intr.alpha) * xi_d1_z;
    if denom <= DENOM_EPS {
        return PixelPoint::invalid();
    }

    let u = intr.fx * x / denom + intr.cx;
    let v = intr.fy * y / denom + intr.cy;
    let in_bounds =
        u >= 0.0 && u < f64::from(intr.width) && v >= 0.0 && v < f64::from(intr.height);
    PixelPoint {
        u,
        v,
        valid: in_bounds && u.is_finite() && v.is_finite(),
    }
}

/// Element-wise [`project`] over a cloud; order preserved.
pub fn project_cloud(points: &[Point3<f64>], intr: &DoubleSphereIntrinsics) -> Vec<PixelPoint> {
    points.iter().map(|p| project(p, intr)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn pinhole() -> DoubleSphereIntrinsics {
        DoubleSphereIntrinsics::pinhole(500.0, 500.0, 320.0, 240.0, 640, 480).unwrap()
    }

    #[test]
    fn optical_axis_hits_principal_point() {
        let px = project(&Point3::new(0.0, 0.0, 2.0), &pinhole());
        assert!(px.valid);
        assert_relative_eq!(px.u, 320.0, epsilon = 1e-12);
        assert_relative_eq!(px.v, 240.0, epsilon = 1e-12);
    }

    #[test]
    fn pinhole_reduction() {
        // u = fx·x/z + cx = 500·1/2 + 320 = 570
        let px = project(&Point3::new(1.0, 0.0, 2.0), &pinhole());
        assert!(px.valid);
        assert_relative_eq!(px.u, 570.0, epsilon = 1e-12);
        assert_relative_eq!(px.v, 240.0, epsilon = 1e-12);
    }

    #[test]
    fn point_behind_pinhole_is_invalid() {
        let px = project(&Point3::new(0.0, 0.0, -1.0), &pinhole());
        assert!(!px.valid);
    }

    #[test]
    fn out_of_bounds_is_invalid_not_clamped() {
        let px = project(&Point3::new(10.0, 0.0, 1.0), &pinhole());
        assert!(!px.valid);
    }

    #[test]
    fn fisheye_sees_behind_pinhole_fov() {
        // Wide double-sphere: a point at 95 degrees off axis still projects.
        let intr =
            DoubleSphereIntrinsics::new(120.0, 120.0, 320.0, 240.0, -0.2, 0.6, 640, 480).unwrap();
        let theta = 95.0_f64.to_radians();
        let p = Point3::new(theta.sin() * 3.0, 0.0, theta.cos() * 3.0);
        let px = project(&p, &intr);
        assert!(px.valid, "expected wide-angle projection, got {px:?}");
    }

    #[test]
    fn empty_cloud_projects_to_empty() {
        assert!(project_cloud(&[], &pinhole()).is_empty());
    }

    #[test]
    fn alpha_out_of_range_rejected() {
        assert!(DoubleSphereIntrinsics::new(100.0, 100.0, 0.0, 0.0, 0.0, 1.0, 64, 64).is_err());
        assert!(DoubleSphereIntrinsics::new(100.0, 100.0, 0.0, 0.0, 0.0, -0.1, 64, 64).is_err());
    }

    #[test]
    fn nonpositive_focal_rejected() {
        assert!(DoubleSphereIntrinsics::new(0.0, 100.0, 0.0, 0.0, 0.0, 0.5, 64, 64).is_err());
    }
}
