//! Self-diagnosis metrics and the success/failure classifier.
//!
//! Three metrics judge a calibration without ground truth: the MI value
//! (maximal at the true extrinsics), the finite-difference gradient of the MI
//! (zero at a maximum) and its peakedness — the sign-flipped second
//! difference, large and positive at a sharp peak. A calibration fails when
//! any metric crosses its threshold.
//!
//! The histogram objective is piecewise constant at tiny parameter scales, so
//! the finite-difference step must be large enough to cross pixel and bin
//! boundaries; the 0.25° default is chosen for that, not for truncation
//! error.

use serde::{Deserialize, Serialize};

use crate::camera::DoubleSphereIntrinsics;
use crate::features::FrameSet;
use crate::geometry::ExtrinsicParams;
use crate::mi::{average_mi, MiConfig};
use crate::{Error, Result};

/// Default finite-difference step: 0.25 degrees.
pub const DEFAULT_FD_STEP_RAD: f64 = 0.25 * std::f64::consts::PI / 180.0;

/// Which parameter axes the metrics differentiate over.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MetricAxes {
    /// The three rotation angles (the default; translation barely moves the
    /// objective at automotive scales).
    Rotation,
    /// All six parameters.
    Full,
}

impl MetricAxes {
    pub fn indices(self) -> &'static [usize] {
        match self {
            MetricAxes::Rotation => &[0, 1, 2],
            MetricAxes::Full => &[0, 1, 2, 3, 4, 5],
        }
    }

    pub fn names(self) -> &'static [&'static str] {
        match self {
            MetricAxes::Rotation => &["rx", "ry", "rz"],
            MetricAxes::Full => &["rx", "ry", "rz", "tx", "ty", "tz"],
        }
    }
}

/// One diagnosis: the MI value plus finite-difference first and second
/// derivative summaries at a parameter point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsReport {
    /// Average MI at the probe point, nats.
    pub mi_value: f64,
    /// Central-difference ∂MI/∂θ per differentiated axis, nats/rad.
    pub grad: Vec<f64>,
    /// Euclidean norm of `grad`.
    pub grad_norm: f64,
    /// Peakedness per axis: the negated second difference, nats/rad²
    /// (positive at a concave peak).
    pub curvature: Vec<f64>,
    /// Mean peakedness over the differentiated axes.
    pub curvature_agg: f64,
    /// Finite-difference step used, radians.
    pub step_size: f64,
    /// Axis labels matching `grad`/`curvature` order.
    pub axes: Vec<String>,
}

/// Failure thresholds for the three metrics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassifierThresholds {
    /// MI below this value fails, nats.
    pub mi_lim: f64,
    /// Gradient norm above this value fails, nats/rad.
    pub grad_lim: f64,
    /// Aggregate peakedness below this value fails, nats/rad².
    pub curv_lim: f64,
}

/// Classifier output. Failure verdicts are data, not errors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Success,
    Failure,
}

/// How well each metric separates the truth-side from the error-side reports
/// when fitting thresholds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeparationReport {
    /// Gap between the worst truth-side and best error-side value per metric
    /// (mi, grad, curvature). Negative means overlap.
    pub mi_margin: f64,
    pub grad_margin: f64,
    pub curv_margin: f64,
    /// Which metrics separated cleanly.
    pub separating: [bool; 3],
}

/// Central differences `(f(θ+h·eᵢ) − f(θ−h·eᵢ))/(2h)` over the given axes.
pub fn fd_gradient<F>(
    mut objective: F,
    params: &ExtrinsicParams,
    h: f64,
    axes: MetricAxes,
) -> Result<Vec<f64>>
where
    F: FnMut(&ExtrinsicParams) -> Result<f64>,
{
    check_step(h)?;
    let base = params.to_array();
    let mut grad = Vec::with_capacity(axes.indices().len());
    for &i in axes.indices() {
        let f_plus = objective(&offset(&base, i, h))?;
        let f_minus = objective(&offset(&base, i, -h))?;
        ensure_finite(f_plus)?;
        ensure_finite(f_minus)?;
        grad.push((f_plus - f_minus) / (2.0 * h));
    }
    Ok(grad)
}

/// Peakedness `−(f(θ+h·eᵢ) − 2f(θ) + f(θ−h·eᵢ))/h²` per axis, so a concave
/// peak yields positive values.
pub fn fd_curvature<F>(
    mut objective: F,
    params: &ExtrinsicParams,
    h: f64,
    axes: MetricAxes,
) -> Result<Vec<f64>>
where
    F: FnMut(&ExtrinsicParams) -> Result<f64>,
{
    check_step(h)?;
    let base = params.to_array();
    let f0 = objective(params)?;
    ensure_finite(f0)?;
    let mut curv = Vec::with_capacity(axes.indices().len());
    for &i in axes.indices() {
        let f_plus = objective(&offset(&base, i, h))?;
        let f_minus = objective(&offset(&base, i, -h))?;
        ensure_finite(f_plus)?;
        ensure_finite(f_minus)?;
        curv.push(-(f_plus - 2.0 * f0 + f_minus) / (h * h));
    }
    Ok(curv)
}

fn check_step(h: f64) -> Result<()> {
    if !(h > 0.0) || !h.is_finite() {
        return Err(Error::Precondition(format!(
            "finite-difference step must be positive, got {h}"
        )));
    }
    Ok(())
}

fn ensure_finite(f: f64) -> Result<f64> {
    if !f.is_finite() {
        return Err(Error::AbortedOptimization(format!(
            "objective returned {f} during diagnosis"
        )));
    }
    Ok(f)
}

fn offset(base: &[f64; 6], axis: usize, h: f64) -> ExtrinsicParams {
    let mut arr = *base;
    arr[axis] += h;
    ExtrinsicParams::from_array(arr).expect("finite probe parameters")
}

/// Computes all three metrics of the average-MI objective at `params` over
/// the rotation axes.
pub fn diagnose(
    frames: &FrameSet,
    params: &ExtrinsicParams,
    intr: &DoubleSphereIntrinsics,
    mi_cfg: &MiConfig,
    h: f64,
) -> Result<DiagnosticsReport> {
    diagnose_axes(frames, params, intr, mi_cfg, h, MetricAxes::Rotation)
}

/// [`diagnose`] with an explicit axis set (6-DOF diagnostics).
pub fn diagnose_axes(
    frames: &FrameSet,
    params: &ExtrinsicParams,
    intr: &DoubleSphereIntrinsics,
    mi_cfg: &MiConfig,
    h: f64,
    axes: MetricAxes,
) -> Result<DiagnosticsReport> {
    check_step(h)?;
    // Empty overlap at the probe center propagates; off-center probes score 0
    // like the optimizer's objective wrapper.
    let mi_value = average_mi(frames, params, intr, mi_cfg)?;
    let mut objective = |theta: &ExtrinsicParams| match average_mi(frames, theta, intr, mi_cfg) {
        Ok(v) => Ok(v),
        Err(Error::EmptyOverlap) => Ok(0.0),
        Err(e) => Err(e),
    };
    let grad = fd_gradient(&mut objective, params, h, axes)?;
    let curvature = fd_curvature(&mut objective, params, h, axes)?;
    Ok(assemble_report(mi_value, grad, curvature, h, axes))
}

fn assemble_report(
    mi_value: f64,
    grad: Vec<f64>,
    curvature: Vec<f64>,
    h: f64,
    axes: MetricAxes,
) -> DiagnosticsReport {
    let grad_norm = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
    let curvature_agg = curvature.iter().sum::<f64>() / curvature.len() as f64;
    DiagnosticsReport {
        mi_value,
        grad,
        grad_norm,
        curvature,
        curvature_agg,
        step_size: h,
        axes: axes.names().iter().map(|s| s.to_string()).collect(),
    }
}

/// Applies the failure rule: failure iff `mi < mi_lim` or
/// `grad_norm > grad_lim` or `curvature_agg < curv_lim`. Equality on any
/// threshold is success.
pub fn classify(report: &DiagnosticsReport, thr: &ClassifierThresholds) -> Verdict {
    if report.mi_value < thr.mi_lim
        || report.grad_norm > thr.grad_lim
        || report.curvature_agg < thr.curv_lim
    {
        Verdict::Failure
    } else {
        Verdict::Success
    }
}

/// Fits thresholds as the midpoint between the worst truth-side value and the
/// best error-side value, per metric.
///
/// A metric whose distributions overlap gets a non-triggering threshold just
/// past its worst truth-side value, so it never fails a truth-side report.
/// Only when all three metrics overlap is there nothing to fit and an error
/// is returned.
pub fn fit_thresholds(
    reports_at_truth: &[DiagnosticsReport],
    reports_at_error: &[DiagnosticsReport],
) -> Result<(ClassifierThresholds, SeparationReport)> {
    if reports_at_truth.is_empty() || reports_at_error.is_empty() {
        return Err(Error::Precondition(
            "threshold fitting needs reports on both sides".into(),
        ));
    }

    let min = |v: &mut dyn Iterator<Item = f64>| v.fold(f64::INFINITY, f64::min);
    let max = |v: &mut dyn Iterator<Item = f64>| v.fold(f64::NEG_INFINITY, f64::max);

    // MI and peakedness are high on the truth side, gradient norm is low.
    let truth_mi_worst = min(&mut reports_at_truth.iter().map(|r| r.mi_value));
    let error_mi_best = max(&mut reports_at_error.iter().map(|r| r.mi_value));
    let truth_grad_worst = max(&mut reports_at_truth.iter().map(|r| r.grad_norm));
    let error_grad_best = min(&mut reports_at_error.iter().map(|r| r.grad_norm));
    let truth_curv_worst = min(&mut reports_at_truth.iter().map(|r| r.curvature_agg));
    let error_curv_best = max(&mut reports_at_error.iter().map(|r| r.curvature_agg));

    let mi_margin = truth_mi_worst - error_mi_best;
    let grad_margin = error_grad_best - truth_grad_worst;
    let curv_margin = truth_curv_worst - error_curv_best;
    let separating = [mi_margin > 0.0, grad_margin > 0.0, curv_margin > 0.0];
    if !separating.iter().any(|s| *s) {
        return Err(Error::NoSeparatingThreshold(format!(
            "all metrics overlap (mi {mi_margin:.3e}, grad {grad_margin:.3e}, curv {curv_margin:.3e})"
        )));
    }

    // Overlapping metrics get thresholds backed off past the worst truth
    // value by a quarter of the truth-side spread, so they stay silent on
    // truth-like held-out data.
    let truth_mi_best = max(&mut reports_at_truth.iter().map(|r| r.mi_value));
    let truth_grad_best = min(&mut reports_at_truth.iter().map(|r| r.grad_norm));
    let truth_curv_best = max(&mut reports_at_truth.iter().map(|r| r.curvature_agg));
    let slack = |spread: f64, scale: f64| 0.25 * spread.abs() + 1e-9 * scale.abs().max(1.0);
    let thresholds = ClassifierThresholds {
        mi_lim: if separating[0] {
            0.5 * (truth_mi_worst + error_mi_best)
        } else {
            truth_mi_worst - slack(truth_mi_best - truth_mi_worst, truth_mi_worst)
        },
        grad_lim: if separating[1] {
            0.5 * (truth_grad_worst + error_grad_best)
        } else {
            truth_grad_worst + slack(truth_grad_worst - truth_grad_best, truth_grad_worst)
        },
        curv_lim: if separating[2] {
            0.5 * (truth_curv_worst + error_curv_best)
        } else {
            truth_curv_worst - slack(truth_curv_best - truth_curv_worst, truth_curv_worst)
        },
    };
    Ok((
        thresholds,
        SeparationReport {
            mi_margin,
            grad_margin,
            curv_margin,
            separating,
        },
    ))
}
