//! Bounded derivative-free maximization of the average-MI objective.
//!
//! The engine is a trust-region method that rebuilds a separable quadratic
//! model from a 2d+1 interpolation stencil each iteration and maximizes it in
//! closed form inside the box ∩ trust-region intersection. It needs no
//! derivatives, respects the box on every evaluation, is fully deterministic,
//! and handles the fine-grained staircase structure of a histogram objective
//! by shrinking the stencil radius only when the model stops producing
//! improvement. The engine sits behind [`maximize`] so a different bounded
//! direct-search method can substitute without touching callers.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::camera::DoubleSphereIntrinsics;
use crate::features::FrameSet;
use crate::geometry::ExtrinsicParams;
use crate::mi::{average_mi, MiConfig};
use crate::{Error, Result};

/// Box bounds, free-parameter mask and stopping rules for [`maximize`].
///
/// Bounds are half-widths centered on the initial guess, one per parameter
/// family. The defaults free the three rotation angles and hold translation
/// fixed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptimizerConfig {
    /// Half-width of the rotation box around θ₀, radians per axis.
    pub rotation_bound_rad: f64,
    /// Half-width of the translation box around θ₀, meters per axis.
    pub translation_bound_m: f64,
    /// Which of `[θx, θy, θz, tx, ty, tz]` the optimizer may move.
    pub free: [bool; 6],
    /// Step tolerance for rotation axes, radians.
    pub step_tol_rot_rad: f64,
    /// Step tolerance for translation axes, meters.
    pub step_tol_trans_m: f64,
    /// Evaluation budget per free parameter.
    pub max_evals_per_free_param: usize,
    /// Initial stencil/trust radius as a fraction of the bound half-width.
    pub initial_radius_scaled: f64,
    /// Recorded in result metadata; the deterministic engine draws no random
    /// numbers but stochastic substitutes would.
    pub seed: u64,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            rotation_bound_rad: 15.0_f64.to_radians(),
            translation_bound_m: 0.5,
            free: [true, true, true, false, false, false],
            step_tol_rot_rad: 1e-4,
            step_tol_trans_m: 1e-4,
            max_evals_per_free_param: 500,
            initial_radius_scaled: 0.15,
            seed: 0,
        }
    }
}

impl OptimizerConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.rotation_bound_rad > 0.0) || !(self.translation_bound_m > 0.0) {
            return Err(Error::InvalidParameter(
                "optimizer bounds must be positive".into(),
            ));
        }
        if !self.free.iter().any(|f| *f) {
            return Err(Error::InvalidParameter(
                "at least one parameter must be free".into(),
            ));
        }
        if !(self.step_tol_rot_rad > 0.0) || !(self.step_tol_trans_m > 0.0) {
            return Err(Error::InvalidParameter(
                "step tolerances must be positive".into(),
            ));
        }
        if self.max_evals_per_free_param == 0 {
            return Err(Error::InvalidParameter(
                "evaluation budget must be positive".into(),
            ));
        }
        if !(self.initial_radius_scaled > 0.0 && self.initial_radius_scaled <= 1.0) {
            return Err(Error::InvalidParameter(
                "initial radius must lie in (0, 1]".into(),
            ));
        }
        Ok(())
    }

    fn bound_for_axis(&self, axis: usize) -> f64 {
        if axis < 3 {
            self.rotation_bound_rad
        } else {
            self.translation_bound_m
        }
    }

    fn tol_for_axis(&self, axis: usize) -> f64 {
        if axis < 3 {
            self.step_tol_rot_rad
        } else {
            self.step_tol_trans_m
        }
    }
}

/// Engine hyperparameters as actually used, kept with every result for
/// reproducibility.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EngineMeta {
    pub engine: String,
    pub initial_radius_scaled: f64,
    pub final_radius_scaled: f64,
    pub seed: u64,
}

/// Outcome of one bounded maximization.
#[derive(Debug, Clone)]
pub struct CalibrationResult {
    pub theta_star: ExtrinsicParams,
    pub objective_at_optimum: f64,
    pub objective_at_start: f64,
    pub evaluations: usize,
    pub elapsed_seconds: f64,
    /// True when the step tolerance was reached within the budget.
    pub converged: bool,
    pub meta: EngineMeta,
}

struct Eval {
    x: Vec<f64>,
    f: f64,
}

struct Search<'a, F> {
    objective: F,
    theta0: [f64; 6],
    axes: Vec<usize>,
    scales: Vec<f64>,
    budget: usize,
    evaluations: usize,
    best: Eval,
    _cfg: &'a OptimizerConfig,
}

impl<'a, F> Search<'a, F>
where
    F: FnMut(&ExtrinsicParams) -> Result<f64>,
{
    fn theta_at(&self, x: &[f64]) -> ExtrinsicParams {
        let mut arr = self.theta0;
        for (k, &axis) in self.axes.iter().enumerate() {
            arr[axis] = self.theta0[axis] + x[k] * self.scales[k];
        }
        // construction cannot fail: finite offsets on finite components
        ExtrinsicParams::from_array(arr).expect("finite candidate parameters")
    }

    fn eval(&mut self, x: &[f64]) -> Result<Option<f64>> {
        if self.evaluations >= self.budget {
            return Ok(None);
        }
        self.evaluations += 1;
        let theta = self.theta_at(x);
        let f = (self.objective)(&theta)?;
        if !f.is_finite() {
            return Err(Error::AbortedOptimization(format!(
                "objective returned {f} at {theta:?}"
            )));
        }
        if f > self.best.f {
            self.best = Eval { x: x.to_vec(), f };
        }
        Ok(Some(f))
    }
}

/// Maximizes `objective` over the box `theta0 ± bounds` on the free axes.
///
/// The result's `theta_star` never scores below `theta0`, masked parameters
/// are returned bit-identical, and two runs with the same inputs produce the
/// same result. A non-finite objective value aborts with an error; an
/// exhausted budget is reported as `converged = false`, not an error.
pub fn maximize<F>(
    mut objective: F,
    theta0: &ExtrinsicParams,
    cfg: &OptimizerConfig,
) -> Result<CalibrationResult>
where
    F: FnMut(&ExtrinsicParams) -> Result<f64>,
{
    cfg.validate()?;
    let started = Instant::now();

    let axes: Vec<usize> = (0..6).filter(|a| cfg.free[*a]).collect();
    let scales: Vec<f64> = axes.iter().map(|a| cfg.bound_for_axis(*a)).collect();
    let d = axes.len();
    // stop when every free axis is resolved at least to its tolerance
    let rho_end = axes
        .iter()
        .map(|a| cfg.tol_for_axis(*a) / cfg.bound_for_axis(*a))
        .fold(f64::INFINITY, f64::min);

    let mut search = Search {
        objective: &mut objective,
        theta0: theta0.to_array(),
        axes,
        scales,
        budget: cfg.max_evals_per_free_param * d,
        evaluations: 0,
        best: Eval {
            x: vec![0.0; d],
            f: f64::NEG_INFINITY,
        },
        _cfg: cfg,
    };

    let center = vec![0.0; d];
    let f0 = search
        .eval(&center)?
        .expect("budget admits at least one evaluation");

    let mut xb = center;
    let mut fb = f0;
    let mut rho = cfg.initial_radius_scaled;
    let mut delta = 2.0 * rho;
    let mut converged = false;

    'outer: while search.evaluations < search.budget {
        if rho < rho_end {
            converged = true;
            break;
        }

        // 2d-point stencil around the center, clipped to the box.
        let mut grads = vec![0.0; d];
        let mut curvs = vec![0.0; d];
        let mut iter_best: Option<Eval> = None;
        for k in 0..d {
            let lo = (xb[k] - rho).max(-1.0);
            let hi = (xb[k] + rho).min(1.0);
            let mut x_lo = xb.clone();
            x_lo[k] = lo;
            let mut x_hi = xb.clone();
            x_hi[k] = hi;
            let Some(f_lo) = search.eval(&x_lo)? else { break 'outer };
            let Some(f_hi) = search.eval(&x_hi)? else { break 'outer };
            for (x, f) in [(x_lo, f_lo), (x_hi, f_hi)] {
                if iter_best.as_ref().is_none_or(|b| f > b.f) {
                    iter_best = Some(Eval { x, f });
                }
            }
            // quadratic through (a, f_lo), (0, fb), (b, f_hi) in the offset s
            let a = lo - xb[k];
            let b = hi - xb[k];
            let da = f_lo - fb;
            let db = f_hi - fb;
            let det = a * b * (b - a);
            if det.abs() < f64::EPSILON {
                continue;
            }
            curvs[k] = 2.0 * (a * db - b * da) / det;
            grads[k] = (da - 0.5 * curvs[k] * a * a) / a;
        }

        // Closed-form model maximizer per axis inside box ∩ trust region.
        let mut step = vec![0.0; d];
        let mut predicted = 0.0;
        for k in 0..d {
            let lo = (-delta).max(-1.0 - xb[k]);
            let hi = delta.min(1.0 - xb[k]);
            let q = |s: f64| grads[k] * s + 0.5 * curvs[k] * s * s;
            let mut s_best = 0.0;
            let mut q_best = 0.0;
            for s in [lo, hi] {
                if q(s) > q_best {
                    q_best = q(s);
                    s_best = s;
                }
            }
            if curvs[k] < 0.0 {
                let s = (-grads[k] / curvs[k]).clamp(lo, hi);
                if q(s) > q_best {
                    q_best = q(s);
                    s_best = s;
                }
            }
            step[k] = s_best;
            predicted += q_best;
        }

        let step_norm = step.iter().fold(0.0_f64, |m, s| m.max(s.abs()));
        if predicted > 0.0 && step_norm > 1e-3 * rho {
            let x_new: Vec<f64> = xb.iter().zip(&step).map(|(x, s)| x + s).collect();
            let Some(f_new) = search.eval(&x_new)? else { break 'outer };
            let ratio = (f_new - fb) / predicted;
            if ratio > 0.7 && step_norm >= 0.9 * delta {
                delta = (2.0 * delta).min(1.0);
            } else if ratio < 0.25 {
                delta = (0.5 * delta).max(rho);
            }
            if iter_best.as_ref().is_none_or(|b| f_new > b.f) {
                iter_best = Some(Eval { x: x_new, f: f_new });
            }
        }

        match iter_best {
            Some(b) if b.f > fb => {
                xb = b.x;
                fb = b.f;
            }
            _ => {
                // no progress at this resolution
                if delta > rho {
                    delta = rho;
                } else {
                    rho *= 0.5;
                    delta = rho;
                }
            }
        }
    }

    let theta_star = search.theta_at(&search.best.x);
    Ok(CalibrationResult {
        theta_star,
        objective_at_optimum: search.best.f,
        objective_at_start: f0,
        evaluations: search.evaluations,
        elapsed_seconds: started.elapsed().as_secs_f64(),
        converged,
        meta: EngineMeta {
            engine: "stencil-quadratic-trust-region".into(),
            initial_radius_scaled: cfg.initial_radius_scaled,
            final_radius_scaled: rho,
            seed: cfg.seed,
        },
    })
}

/// Runs the full calibration: wires [`average_mi`] over `frames` in as the
/// objective and maximizes it from `theta0`.
///
/// An empty overlap at `theta0` is propagated as an error; at any other probe
/// it scores 0, which never beats a feasible start because MI is nonnegative.
pub fn calibrate(
    frames: &FrameSet,
    theta0: &ExtrinsicParams,
    intr: &DoubleSphereIntrinsics,
    mi_cfg: &MiConfig,
    opt_cfg: &OptimizerConfig,
) -> Result<CalibrationResult> {
    average_mi(frames, theta0, intr, mi_cfg)?;
    maximize(
        |theta| match average_mi(frames, theta, intr, mi_cfg) {
            Ok(v) => Ok(v),
            Err(Error::EmptyOverlap) => Ok(0.0),
            Err(e) => Err(e),
        },
        theta0,
        opt_cfg,
    )
}
