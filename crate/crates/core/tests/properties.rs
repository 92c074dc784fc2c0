//! Property tests for the pure numeric layers.

use micalib::camera::project;
use micalib::features::FeaturePairs;
use micalib::geometry::{params_to_transform, transform_points};
use micalib::mi::{build_histogram, entropy, mutual_information};
use micalib::{DoubleSphereIntrinsics, ExtrinsicParams, MiConfig};
use nalgebra::Point3;
use proptest::prelude::*;

fn intrinsics_strategy() -> impl Strategy<Value = DoubleSphereIntrinsics> {
    (
        50.0..500.0_f64,
        50.0..500.0_f64,
        100.0..540.0_f64,
        80.0..400.0_f64,
        -0.9..0.9_f64,
        0.0..0.95_f64,
    )
        .prop_map(|(fx, fy, cx, cy, xi, alpha)| {
            DoubleSphereIntrinsics::new(fx, fy, cx, cy, xi, alpha, 640, 480).unwrap()
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn valid_projections_are_finite_and_in_bounds(
        intr in intrinsics_strategy(),
        x in -40.0..40.0_f64,
        y in -40.0..40.0_f64,
        z in -40.0..40.0_f64,
    ) {
        let px = project(&Point3::new(x, y, z), &intr);
        if px.valid {
            prop_assert!(px.u.is_finite() && px.v.is_finite());
            prop_assert!(px.u >= 0.0 && px.u < 640.0);
            prop_assert!(px.v >= 0.0 && px.v < 480.0);
        }
    }

    #[test]
    fn histograms_are_normalized_with_consistent_marginals(
        values in prop::collection::vec((0.0..100.0_f64, -5.0..5.0_f64), 1..400),
        bins in 2..40_usize,
    ) {
        let pairs = FeaturePairs {
            range: values.iter().map(|(r, _)| *r).collect(),
            depth: values.iter().map(|(_, d)| *d).collect(),
            pixels: vec![(0, 0); values.len()],
        };
        let h = build_histogram(&pairs, &MiConfig { bins, pooled: false }).unwrap();
        let mass: f64 = h.joint().iter().sum();
        prop_assert!((mass - 1.0).abs() < 1e-12);
        for i in 0..bins {
            let row: f64 = (0..bins).map(|j| h.probability(i, j)).sum();
            prop_assert!((row - h.marginal_range()[i]).abs() < 1e-12);
        }
        let mi = mutual_information(&h).unwrap();
        let cap = entropy(h.marginal_range()).unwrap().min(entropy(h.marginal_depth()).unwrap());
        prop_assert!(mi >= 0.0 && mi <= cap + 1e-12);
    }

    #[test]
    fn entropy_lies_between_zero_and_log_b(
        raw in prop::collection::vec(0.0..1.0_f64, 1..64),
    ) {
        let total: f64 = raw.iter().sum();
        prop_assume!(total > 1e-9);
        let p: Vec<f64> = raw.iter().map(|v| v / total).collect();
        let h = entropy(&p).unwrap();
        prop_assert!(h >= 0.0);
        prop_assert!(h <= (p.len() as f64).ln() + 1e-12);
    }

    #[test]
    fn transforms_preserve_norm_differences(
        rx in -1.0..1.0_f64,
        ry in -1.0..1.0_f64,
        rz in -1.0..1.0_f64,
        t in prop::array::uniform3(-5.0..5.0_f64),
        pts in prop::collection::vec(prop::array::uniform3(-20.0..20.0_f64), 2..20),
    ) {
        let params = ExtrinsicParams::new([rx, ry, rz], t).unwrap();
        let cloud: Vec<Point3<f64>> = pts.iter().map(|p| Point3::new(p[0], p[1], p[2])).collect();
        let moved = transform_points(&params_to_transform(&params), &cloud);
        prop_assert_eq!(moved.len(), cloud.len());
        for i in 1..cloud.len() {
            let before = (cloud[i] - cloud[0]).norm();
            let after = (moved[i] - moved[0]).norm();
            prop_assert!((before - after).abs() < 1e-9);
        }
    }
}
