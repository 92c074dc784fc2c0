//! Histogram-based mutual information — the optimization objective.
//!
//! Each frame's feature pairs fill a B×B joint histogram whose bin ranges
//! adapt to the per-frame min/max of each feature list; the adaptive ranges
//! absorb the unknown affine scale of relative depth. MI is the entropy sum
//! `H(range) + H(depth) − H(joint)` in nats, and the objective is the
//! arithmetic mean of the per-frame MI over the whole frame set.

use crate::camera::DoubleSphereIntrinsics;
use crate::features::{extract_feature_pairs, FeaturePairs, FrameSet};
use crate::geometry::ExtrinsicParams;
use crate::{Error, Result};

/// Histogram and averaging configuration.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct MiConfig {
    /// Bins per axis (B ≥ 2).
    pub bins: usize,
    /// Pool samples from all frames into one histogram instead of averaging
    /// per-frame MI. Off by default.
    pub pooled: bool,
}

impl Default for MiConfig {
    fn default() -> Self {
        Self {
            bins: 50,
            pooled: false,
        }
    }
}

impl MiConfig {
    pub fn validate(&self) -> Result<()> {
        if self.bins < 2 {
            return Err(Error::InvalidParameter(format!(
                "histogram needs at least 2 bins, got {}",
                self.bins
            )));
        }
        Ok(())
    }
}

/// Normalized B×B co-occurrence table of (range, depth) features with its
/// marginals and bin edges.
#[derive(Debug, Clone)]
pub struct JointHistogram {
    bins: usize,
    /// Row-major probabilities, row = range bin, column = depth bin.
    joint: Vec<f64>,
    marginal_range: Vec<f64>,
    marginal_depth: Vec<f64>,
    edges_range: Vec<f64>,
    edges_depth: Vec<f64>,
    sample_count: usize,
}

impl JointHistogram {
    pub fn bin_count(&self) -> usize {
        self.bins
    }

    pub fn probability(&self, range_bin: usize, depth_bin: usize) -> f64 {
        self.joint[range_bin * self.bins + depth_bin]
    }

    pub fn joint(&self) -> &[f64] {
        &self.joint
    }

    pub fn marginal_range(&self) -> &[f64] {
        &self.marginal_range
    }

    pub fn marginal_depth(&self) -> &[f64] {
        &self.marginal_depth
    }

    pub fn edges_range(&self) -> &[f64] {
        &self.edges_range
    }

    pub fn edges_depth(&self) -> &[f64] {
        &self.edges_depth
    }

    pub fn sample_count(&self) -> usize {
        self.sample_count
    }

    /// Builds directly from a probability table (row-major, B×B). Marginals
    /// are derived. Intended for tests and synthetic tables.
    pub fn from_probabilities(bins: usize, joint: Vec<f64>) -> Result<Self> {
        if bins < 2 || joint.len() != bins * bins {
            return Err(Error::InvalidParameter(format!(
                "expected {}x{} probabilities, got {} entries",
                bins,
                bins,
                joint.len()
            )));
        }
        let total: f64 = kahan_sum(joint.iter().copied());
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidDistribution(format!(
                "joint probabilities sum to {total}, not 1"
            )));
        }
        if let Some(neg) = joint.iter().find(|p| **p < 0.0) {
            return Err(Error::InvalidDistribution(format!(
                "negative probability {neg}"
            )));
        }
        let mut marginal_range = vec![0.0; bins];
        let mut marginal_depth = vec![0.0; bins];
        for i in 0..bins {
            for j in 0..bins {
                let p = joint[i * bins + j];
                marginal_range[i] += p;
                marginal_depth[j] += p;
            }
        }
        Ok(Self {
            bins,
            joint,
            marginal_range,
            marginal_depth,
            edges_range: Vec::new(),
            edges_depth: Vec::new(),
            sample_count: 0,
        })
    }
}

/// Bin index of `x` over `[lo, hi]` split into `bins` equal widths.
///
/// The upper edge is closed: `x == hi` lands in the last bin. A degenerate
/// range (`hi == lo`) puts all mass in bin 0.
fn bin_index(x: f64, lo: f64, hi: f64, bins: usize) -> usize {
    let span = hi - lo;
    if span <= 0.0 {
        return 0;
    }
    let idx = ((x - lo) / span * bins as f64) as usize;
    idx.min(bins - 1)
}

fn bin_edges(lo: f64, hi: f64, bins: usize) -> Vec<f64> {
    let span = hi - lo;
    let mut edges: Vec<f64> = (0..=bins)
        .map(|k| lo + span * (k as f64 / bins as f64))
        .collect();
    edges[bins] = hi;
    edges
}

fn min_max(values: &[f64]) -> (f64, f64) {
    values.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
        (lo.min(*v), hi.max(*v))
    })
}

/// Compensated (Kahan) summation; keeps entropy sums well below the 1e−12
/// agreement tolerance between the two MI forms.
pub(crate) fn kahan_sum(values: impl Iterator<Item = f64>) -> f64 {
    let mut sum = 0.0;
    let mut c = 0.0;
    for v in values {
        let y = v - c;
        let t = sum + y;
        c = (t - sum) - y;
        sum = t;
    }
    sum
}

/// Bins feature pairs into a normalized joint histogram with per-pair-list
/// min/max bin ranges.
pub fn build_histogram(pairs: &FeaturePairs, cfg: &MiConfig) -> Result<JointHistogram> {
    cfg.validate()?;
    if pairs.is_empty() {
        return Err(Error::Precondition(
            "cannot build a histogram from zero pairs".into(),
        ));
    }
    let bins = cfg.bins;
    let (range_lo, range_hi) = min_max(&pairs.range);
    let (depth_lo, depth_hi) = min_max(&pairs.depth);

    let mut counts = vec![0u64; bins * bins];
    for (r, d) in pairs.range.iter().zip(&pairs.depth) {
        let i = bin_index(*r, range_lo, range_hi, bins);
        let j = bin_index(*d, depth_lo, depth_hi, bins);
        counts[i * bins + j] += 1;
    }

    let m = pairs.len() as f64;
    let joint: Vec<f64> = counts.iter().map(|c| *c as f64 / m).collect();
    let mut marginal_range = vec![0.0; bins];
    let mut marginal_depth = vec![0.0; bins];
    for i in 0..bins {
        for j in 0..bins {
            let p = joint[i * bins + j];
            marginal_range[i] += p;
            marginal_depth[j] += p;
        }
    }

    Ok(JointHistogram {
        bins,
        joint,
        marginal_range,
        marginal_depth,
        edges_range: bin_edges(range_lo, range_hi, bins),
        edges_depth: bin_edges(depth_lo, depth_hi, bins),
        sample_count: pairs.len(),
    })
}

/// Shannon entropy `−Σ p·ln p` in nats, with `0·ln 0 = 0`.
///
/// The input must be a distribution: non-negative, summing to 1 within 1e−9.
pub fn entropy(probabilities: &[f64]) -> Result<f64> {
    if let Some(neg) = probabilities.iter().find(|p| **p < 0.0) {
        return Err(Error::InvalidDistribution(format!(
            "negative probability {neg}"
        )));
    }
    let total = kahan_sum(probabilities.iter().copied());
    if (total - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidDistribution(format!(
            "probabilities sum to {total}, not 1"
        )));
    }
    let h = -kahan_sum(
        probabilities
            .iter()
            .filter(|p| **p > 0.0)
            .map(|p| p * p.ln()),
    );
    Ok(h.max(0.0))
}

/// Mutual information of a joint histogram:
/// `H(range marginal) + H(depth marginal) − H(joint)` in nats.
///
/// Rounding can push the sum a hair below zero; it is clamped at 0.
pub fn mutual_information(hist: &JointHistogram) -> Result<f64> {
    let h_range = entropy(hist.marginal_range())?;
    let h_depth = entropy(hist.marginal_depth())?;
    let h_joint = entropy(hist.joint())?;
    let mi = h_range + h_depth - h_joint;
    debug_assert!(mi > -1e-12, "MI below rounding floor: {mi}");
    Ok(mi.max(0.0))
}

/// The calibration objective: mean per-frame MI at the given extrinsics.
///
/// Frames with no overlap contribute 0 but still count toward the mean — an
/// extrinsic guess that projects nothing must score worse, not be excused.
/// Only when every frame has empty overlap is [`Error::EmptyOverlap`]
/// returned. In pooled mode all frames fill one histogram instead.
pub fn average_mi(
    frames: &FrameSet,
    params: &ExtrinsicParams,
    intr: &DoubleSphereIntrinsics,
    cfg: &MiConfig,
) -> Result<f64> {
    cfg.validate()?;
    if frames.is_empty() {
        return Err(Error::Precondition("average_mi needs at least one frame".into()));
    }

    if cfg.pooled {
        let mut pooled = FeaturePairs {
            depth: Vec::new(),
            range: Vec::new(),
            pixels: Vec::new(),
        };
        for frame in &frames.frames {
            match extract_feature_pairs(&frame.depth, &frame.cloud, params, intr) {
                Ok(pairs) => {
                    pooled.depth.extend(pairs.depth);
                    pooled.range.extend(pairs.range);
                    pooled.pixels.extend(pairs.pixels);
                }
                Err(Error::EmptyOverlap) => {}
                Err(e) => return Err(e),
            }
        }
        if pooled.is_empty() {
            return Err(Error::EmptyOverlap);
        }
        return mutual_information(&build_histogram(&pooled, cfg)?);
    }

    let mut total = 0.0;
    let mut any_overlap = false;
    for frame in &frames.frames {
        match extract_feature_pairs(&frame.depth, &frame.cloud, params, intr) {
            Ok(pairs) => {
                total += mutual_information(&build_histogram(&pairs, cfg)?)?;
                any_overlap = true;
            }
            Err(Error::EmptyOverlap) => {}
            Err(e) => return Err(e),
        }
    }
    if !any_overlap {
        return Err(Error::EmptyOverlap);
    }
    Ok(total / frames.len() as f64)
}
