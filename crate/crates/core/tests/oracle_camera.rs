//! Transcription-independence and degeneracy oracles for the double-sphere
//! projection.

use approx::assert_relative_eq;
use micalib::camera::{project, project_cloud};
use micalib::DoubleSphereIntrinsics;
use nalgebra::Point3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// A second, independently written transcription of the projection formula:
/// normalizes the point first and works on the unit bearing, so rounding
/// paths differ from the production code.
fn project_oracle(p: &Point3<f64>, intr: &DoubleSphereIntrinsics) -> (f64, f64) {
    let norm = (p.x * p.x + p.y * p.y + p.z * p.z).sqrt();
    let (sx, sy, sz) = (p.x / norm, p.y / norm, p.z / norm);
    // on the unit sphere d1 = 1
    let zeta = intr.xi + sz;
    let d2 = (sx * sx + sy * sy + zeta * zeta).sqrt();
    let denom = intr.alpha * d2 + (1.0 - intr.alpha) * zeta;
    (
        intr.fx * (sx / denom) + intr.cx,
        intr.fy * (sy / denom) + intr.cy,
    )
}

#[test]
fn matches_independent_transcription_on_random_forward_points() {
    let intr =
        DoubleSphereIntrinsics::new(280.0, 285.0, 321.0, 239.0, -0.2, 0.6, 640, 480).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let mut checked = 0;
    while checked < 1000 {
        let p = Point3::new(
            rng.random_range(-6.0..6.0),
            rng.random_range(-6.0..6.0),
            rng.random_range(0.3..20.0),
        );
        let px = project(&p, &intr);
        if !px.valid {
            continue;
        }
        let (u, v) = project_oracle(&p, &intr);
        assert!(
            (px.u - u).abs() < 1e-6 && (px.v - v).abs() < 1e-6,
            "({}, {}) vs oracle ({u}, {v})",
            px.u,
            px.v
        );
        checked += 1;
    }
}

#[test]
fn batched_projection_equals_elementwise() {
    let intr =
        DoubleSphereIntrinsics::new(280.0, 280.0, 320.0, 240.0, -0.15, 0.55, 640, 480).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let cloud: Vec<Point3<f64>> = (0..10_000)
        .map(|_| {
            Point3::new(
                rng.random_range(-30.0..30.0),
                rng.random_range(-30.0..30.0),
                rng.random_range(-30.0..30.0),
            )
        })
        .collect();
    let batched = project_cloud(&cloud, &intr);
    assert_eq!(batched.len(), cloud.len());
    for (p, px) in cloud.iter().zip(&batched) {
        let single = project(p, &intr);
        assert_eq!(px.valid, single.valid);
        if px.valid {
            assert_eq!((px.u, px.v), (single.u, single.v));
        }
    }
}

#[test]
fn pinhole_degeneracy_within_1e9_px() {
    let intr = DoubleSphereIntrinsics::pinhole(400.0, 410.0, 320.0, 240.0, 640, 480).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..10_000 {
        let p = Point3::new(
            rng.random_range(-4.0..4.0),
            rng.random_range(-4.0..4.0),
            rng.random_range(0.1..50.0),
        );
        let px = project(&p, &intr);
        let u = 400.0 * p.x / p.z + 320.0;
        let v = 410.0 * p.y / p.z + 240.0;
        let inside = (0.0..640.0).contains(&u) && (0.0..480.0).contains(&v);
        assert_eq!(px.valid, inside);
        if px.valid {
            assert_relative_eq!(px.u, u, epsilon = 1e-9);
            assert_relative_eq!(px.v, v, epsilon = 1e-9);
        }
    }
}

#[test]
fn projection_is_continuous_inside_valid_region() {
    let intr =
        DoubleSphereIntrinsics::new(300.0, 300.0, 320.0, 240.0, -0.2, 0.6, 640, 480).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let mut checked = 0;
    while checked < 2000 {
        let p = Point3::new(
            rng.random_range(-3.0..3.0),
            rng.random_range(-3.0..3.0),
            rng.random_range(0.5..20.0),
        );
        let a = project(&p, &intr);
        if !a.valid {
            continue;
        }
        let q = Point3::new(p.x + 1e-6, p.y - 1e-6, p.z + 1e-6);
        let b = project(&q, &intr);
        if b.valid {
            let dpx = ((a.u - b.u).powi(2) + (a.v - b.v).powi(2)).sqrt();
            assert!(dpx < 1.0, "jump of {dpx}px for a 1e-6 m move at {p:?}");
        }
        checked += 1;
    }
}

#[test]
fn bearing_is_monotone_along_the_xz_plane() {
    let intr =
        DoubleSphereIntrinsics::new(250.0, 250.0, 320.0, 240.0, -0.2, 0.6, 640, 480).unwrap();
    let mut last_u = f64::NEG_INFINITY;
    for i in 0..200 {
        // x/z sweeps from -1.2 to 1.2
        let ratio = -1.2 + 2.4 * i as f64 / 199.0;
        let px = project(&Point3::new(ratio * 5.0, 0.0, 5.0), &intr);
        assert!(px.valid);
        assert!(px.u > last_u, "u not increasing at x/z = {ratio}");
        last_u = px.u;
    }
}

#[test]
fn valid_flags_imply_finite_in_bounds_pixels() {
    let intr =
        DoubleSphereIntrinsics::new(220.0, 230.0, 317.0, 243.0, -0.27, 0.64, 640, 480).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(55);
    for _ in 0..50_000 {
        let p = Point3::new(
            rng.random_range(-50.0..50.0),
            rng.random_range(-50.0..50.0),
            rng.random_range(-50.0..50.0),
        );
        let px = project(&p, &intr);
        if px.valid {
            assert!(px.u.is_finite() && px.v.is_finite());
            assert!((0.0..640.0).contains(&px.u));
            assert!((0.0..480.0).contains(&px.v));
        }
    }
}
