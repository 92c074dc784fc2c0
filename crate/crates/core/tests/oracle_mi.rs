//! Estimator oracles: the KL-divergence definition form of MI, Monte-Carlo
//! bin statistics and relabeling invariance under adaptive bin ranges.

use approx::assert_relative_eq;
use micalib::features::{FeaturePairs, Frame, FrameSet};
use micalib::mi::{average_mi, build_histogram, entropy, mutual_information};
use micalib::synthetic::{generate_scene, make_frameset, make_trajectory, NoiseConfig, SensorRig};
use micalib::{JointHistogram, MiConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_table(rng: &mut ChaCha8Rng, bins: usize) -> JointHistogram {
    let mut joint: Vec<f64> = (0..bins * bins).map(|_| rng.random_range(0.0..1.0)).collect();
    // sprinkle structural zeros so the 0·ln 0 path is exercised
    for p in joint.iter_mut() {
        if rng.random_range(0.0..1.0) < 0.15 {
            *p = 0.0;
        }
    }
    let total: f64 = joint.iter().sum();
    for p in joint.iter_mut() {
        *p /= total;
    }
    JointHistogram::from_probabilities(bins, joint).unwrap()
}

/// MI in its definition form `Σ pᵢⱼ·ln(pᵢⱼ/(pᵢ·pⱼ))`, summed with Neumaier
/// compensation — an independent route to the same number.
fn definition_form_mi(h: &JointHistogram) -> f64 {
    let bins = h.bin_count();
    let mut sum = 0.0;
    let mut comp = 0.0;
    for i in 0..bins {
        for j in 0..bins {
            let pij = h.probability(i, j);
            if pij <= 0.0 {
                continue;
            }
            let term = pij * (pij / (h.marginal_range()[i] * h.marginal_depth()[j])).ln();
            let t = sum + term;
            comp += if sum.abs() >= term.abs() {
                (sum - t) + term
            } else {
                (term - t) + sum
            };
            sum = t;
        }
    }
    sum + comp
}

#[test]
fn entropy_sum_equals_definition_form_on_random_tables() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for trial in 0..1000 {
        let bins = rng.random_range(2..=64);
        let h = random_table(&mut rng, bins);
        let by_entropies = mutual_information(&h).unwrap();
        let by_definition = definition_form_mi(&h);
        assert!(
            (by_entropies - by_definition).abs() < 1e-12,
            "trial {trial} (B={bins}): {by_entropies} vs {by_definition}"
        );
    }
}

#[test]
fn mi_bounded_by_marginal_entropies_on_random_tables() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for _ in 0..1000 {
        let bins = rng.random_range(2..=32);
        let h = random_table(&mut rng, bins);
        let mi = mutual_information(&h).unwrap();
        let h_range = entropy(h.marginal_range()).unwrap();
        let h_depth = entropy(h.marginal_depth()).unwrap();
        assert!(mi >= 0.0);
        assert!(mi <= h_range.min(h_depth) + 1e-12);
        assert!(h_range <= (bins as f64).ln() + 1e-12);
    }
}

#[test]
fn uniform_random_pairs_fill_cells_evenly() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let n = 10_000;
    let pairs = FeaturePairs {
        range: (0..n).map(|_| rng.random_range(0.0..1.0)).collect(),
        depth: (0..n).map(|_| rng.random_range(0.0..1.0)).collect(),
        pixels: vec![(0, 0); n],
    };
    let h = build_histogram(&pairs, &MiConfig { bins: 10, pooled: false }).unwrap();
    for i in 0..10 {
        for j in 0..10 {
            let p = h.probability(i, j);
            assert!(
                (p - 0.01).abs() <= 0.005,
                "cell ({i},{j}) probability {p} outside 0.01 ± 0.005"
            );
        }
    }
}

#[test]
fn swapping_feature_axes_leaves_mi_unchanged() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..50 {
        let n = rng.random_range(50..2000);
        let range: Vec<f64> = (0..n).map(|_| rng.random_range(2.0..40.0)).collect();
        let depth: Vec<f64> = range
            .iter()
            .map(|r| 1.0 / (r + 1.0) + rng.random_range(-0.01..0.01))
            .collect();
        let fwd = FeaturePairs {
            range: range.clone(),
            depth: depth.clone(),
            pixels: vec![(0, 0); n],
        };
        let swapped = FeaturePairs {
            range: depth,
            depth: range,
            pixels: vec![(0, 0); n],
        };
        let cfg = MiConfig { bins: 20, pooled: false };
        let a = mutual_information(&build_histogram(&fwd, &cfg).unwrap()).unwrap();
        let b = mutual_information(&build_histogram(&swapped, &cfg).unwrap()).unwrap();
        assert!((a - b).abs() < 1e-12, "{a} vs {b}");
    }
}

#[test]
fn affine_relabeling_with_adaptive_ranges_is_bin_identical() {
    // Adaptive per-list bin ranges absorb any increasing affine map of one
    // feature list: the histogram is bin-identical, so MI is unchanged.
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for trial in 0..100 {
        let n = rng.random_range(100..3000);
        let range: Vec<f64> = (0..n).map(|_| rng.random_range(2.0..40.0)).collect();
        let depth: Vec<f64> = range
            .iter()
            .map(|r| (-0.08 * r).exp() + rng.random_range(-0.02..0.02))
            .collect();
        let gain = rng.random_range(0.1..8.0);
        let offset = rng.random_range(-3.0..3.0);
        let relabeled: Vec<f64> = depth.iter().map(|d| gain * d + offset).collect();

        let cfg = MiConfig { bins: 30, pooled: false };
        let base = build_histogram(
            &FeaturePairs {
                range: range.clone(),
                depth,
                pixels: vec![(0, 0); n],
            },
            &cfg,
        )
        .unwrap();
        let mapped = build_histogram(
            &FeaturePairs {
                range,
                depth: relabeled,
                pixels: vec![(0, 0); n],
            },
            &cfg,
        )
        .unwrap();
        assert_eq!(base.joint(), mapped.joint(), "trial {trial}: bins moved");
        let a = mutual_information(&base).unwrap();
        let b = mutual_information(&mapped).unwrap();
        assert!((a - b).abs() < 1e-12);
    }
}

#[test]
fn average_mi_is_frame_order_invariant() {
    let scene = generate_scene(11, 12).unwrap();
    let rig = SensorRig::desk_rig();
    let traj = make_trajectory(11, 4, 3.0);
    let frames = make_frameset(&scene, &rig, &traj, &NoiseConfig::default()).unwrap();
    let cfg = MiConfig::default();
    let theta = rig.extrinsics;
    let forward = average_mi(&frames, &theta, &rig.intrinsics, &cfg).unwrap();

    let mut shuffled: Vec<Frame> = frames.frames.clone();
    shuffled.reverse();
    shuffled.swap(0, 2);
    let reordered = average_mi(&FrameSet::new(shuffled), &theta, &rig.intrinsics, &cfg).unwrap();
    assert_relative_eq!(forward, reordered, epsilon = 1e-12);
}

#[test]
fn ground_truth_beats_three_degree_errors_on_average_mi() {
    let scene = generate_scene(21, 20).unwrap();
    let rig = SensorRig::desk_rig();
    let traj = make_trajectory(21, 5, 3.0);
    let frames = make_frameset(&scene, &rig, &traj, &NoiseConfig::default()).unwrap();
    let cfg = MiConfig::default();
    let mi_truth = average_mi(&frames, &rig.extrinsics, &rig.intrinsics, &cfg).unwrap();

    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for _ in 0..16 {
        let delta = micalib::geometry::sample_rotation_perturbation(3.0, &mut rng);
        let probe = rig.extrinsics.perturbed_by(&delta);
        let mi_probe = average_mi(&frames, &probe, &rig.intrinsics, &cfg).unwrap();
        assert!(
            mi_truth > mi_probe,
            "3 degree probe scored {mi_probe} >= truth {mi_truth}"
        );
    }
}

#[test]
fn pooled_mode_scores_ground_truth_highest_too() {
    let scene = generate_scene(31, 16).unwrap();
    let rig = SensorRig::desk_rig();
    let traj = make_trajectory(31, 3, 3.0);
    let frames = make_frameset(&scene, &rig, &traj, &NoiseConfig::default()).unwrap();
    let cfg = MiConfig { bins: 50, pooled: true };
    let mi_truth = average_mi(&frames, &rig.extrinsics, &rig.intrinsics, &cfg).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for _ in 0..8 {
        let delta = micalib::geometry::sample_rotation_perturbation(3.0, &mut rng);
        let probe = rig.extrinsics.perturbed_by(&delta);
        let mi_probe = average_mi(&frames, &probe, &rig.intrinsics, &cfg).unwrap();
        assert!(mi_truth > mi_probe);
    }
}
