//! Per-run result records, written as one CSV and one JSON-lines file per
//! run directory. Angles are degrees at this boundary. The timing column is
//! kept last so reproducibility checks can strip it.

use std::fs;
use std::io::Write;
use std::path::Path;

use anyhow::Context;
use micalib::diagnostics::DiagnosticsReport;
use micalib::{ExtrinsicParams, Verdict};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunRecord {
    /// Window index for monitor runs, trial index for studies, 0 for one-shot
    /// calibrations.
    pub run_id: u64,
    pub first_frame_id: u64,
    pub frame_count: usize,
    pub theta_init_rot_deg: [f64; 3],
    pub theta_init_trans_m: [f64; 3],
    pub theta_final_rot_deg: [f64; 3],
    pub theta_final_trans_m: [f64; 3],
    /// Rotation error of the final estimate against the reference, when a
    /// reference is known.
    pub rotation_error_deg: Option<f64>,
    pub mi: f64,
    pub grad_norm: f64,
    pub curvature_agg: f64,
    pub verdict: Option<Verdict>,
    pub converged: bool,
    pub evaluations: usize,
    pub objective_at_start: f64,
    pub elapsed_s: f64,
}

fn rot_deg(p: &ExtrinsicParams) -> [f64; 3] {
    let r = p.rotation_rad();
    [r[0].to_degrees(), r[1].to_degrees(), r[2].to_degrees()]
}

impl RunRecord {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        run_id: u64,
        frame_ids: &[u64],
        theta_init: &ExtrinsicParams,
        theta_final: &ExtrinsicParams,
        rotation_error_deg: Option<f64>,
        report: &DiagnosticsReport,
        verdict: Option<Verdict>,
        converged: bool,
        evaluations: usize,
        objective_at_start: f64,
        elapsed_s: f64,
    ) -> Self {
        Self {
            run_id,
            first_frame_id: frame_ids.first().copied().unwrap_or_default(),
            frame_count: frame_ids.len(),
            theta_init_rot_deg: rot_deg(theta_init),
            theta_init_trans_m: theta_init.translation_m(),
            theta_final_rot_deg: rot_deg(theta_final),
            theta_final_trans_m: theta_final.translation_m(),
            rotation_error_deg,
            mi: report.mi_value,
            grad_norm: report.grad_norm,
            curvature_agg: report.curvature_agg,
            verdict,
            converged,
            evaluations,
            objective_at_start,
            elapsed_s,
        }
    }
}

pub const CSV_HEADER: &[&str] = &[
    "run_id",
    "first_frame_id",
    "frame_count",
    "init_rx_deg",
    "init_ry_deg",
    "init_rz_deg",
    "init_tx_m",
    "init_ty_m",
    "init_tz_m",
    "final_rx_deg",
    "final_ry_deg",
    "final_rz_deg",
    "final_tx_m",
    "final_ty_m",
    "final_tz_m",
    "rotation_error_deg",
    "mi",
    "grad_norm",
    "curvature_agg",
    "verdict",
    "converged",
    "evaluations",
    "objective_at_start",
    "elapsed_s",
];

fn verdict_str(v: Option<Verdict>) -> &'static str {
    match v {
        Some(Verdict::Success) => "success",
        Some(Verdict::Failure) => "failure",
        None => "",
    }
}

/// Writes `records.csv` and `records.jsonl` into `dir`.
pub fn write_records(dir: &Path, records: &[RunRecord]) -> anyhow::Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;

    let csv_path = dir.join("records.csv");
    let mut w = csv::Writer::from_path(&csv_path)
        .with_context(|| format!("opening {}", csv_path.display()))?;
    w.write_record(CSV_HEADER)?;
    for r in records {
        let mut row: Vec<String> = vec![
            r.run_id.to_string(),
            r.first_frame_id.to_string(),
            r.frame_count.to_string(),
        ];
        for v in r
            .theta_init_rot_deg
            .iter()
            .chain(&r.theta_init_trans_m)
            .chain(&r.theta_final_rot_deg)
            .chain(&r.theta_final_trans_m)
        {
            row.push(v.to_string());
        }
        row.push(r.rotation_error_deg.map(|v| v.to_string()).unwrap_or_default());
        row.push(r.mi.to_string());
        row.push(r.grad_norm.to_string());
        row.push(r.curvature_agg.to_string());
        row.push(verdict_str(r.verdict).to_string());
        row.push(r.converged.to_string());
        row.push(r.evaluations.to_string());
        row.push(r.objective_at_start.to_string());
        row.push(r.elapsed_s.to_string());
        w.write_record(&row)?;
    }
    w.flush()?;

    let jsonl_path = dir.join("records.jsonl");
    let mut f = fs::File::create(&jsonl_path)
        .with_context(|| format!("creating {}", jsonl_path.display()))?;
    for r in records {
        writeln!(f, "{}", serde_json::to_string(r)?)?;
    }
    Ok(())
}
