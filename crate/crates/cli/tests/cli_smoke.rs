//! Command-level behavior: exit codes, degenerate inputs and file handling.

use std::path::Path;
use std::process::Command;
use std::sync::OnceLock;

use tempfile::TempDir;

const BIN: &str = env!("CARGO_BIN_EXE_micalib");

fn shared_dataset() -> &'static (TempDir, String) {
    static DATA: OnceLock<(TempDir, String)> = OnceLock::new();
    DATA.get_or_init(|| {
        let dir = TempDir::new().unwrap();
        let data = dir.path().join("data");
        let status = Command::new(BIN)
            .args([
                "synth",
                "--out",
                data.to_str().unwrap(),
                "--frames",
                "8",
                "--complexity",
                "12",
                "--seed",
                "4",
                "--spacing",
                "1.0",
            ])
            .status()
            .unwrap();
        assert!(status.success());
        let path = data.to_str().unwrap().to_string();
        (dir, path)
    })
}

fn ok(args: &[&str]) -> Vec<u8> {
    let out = Command::new(BIN).args(args).output().unwrap();
    assert!(
        out.status.success(),
        "expected success for {args:?}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out.stdout
}

fn fails(args: &[&str]) -> String {
    let out = Command::new(BIN).args(args).output().unwrap();
    assert!(!out.status.success(), "expected failure for {args:?}");
    String::from_utf8_lossy(&out.stderr).into_owned()
}

#[test]
fn synth_same_seed_writes_identical_dataset() {
    let dir = TempDir::new().unwrap();
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    for out in [&a, &b] {
        ok(&[
            "synth", "--out", out.to_str().unwrap(), "--frames", "3", "--complexity", "8",
            "--seed", "2",
        ]);
    }
    for rel in ["manifest.csv", "clouds/000001.bin", "depths/000002.pfm", "intrinsics.json"] {
        assert_eq!(
            std::fs::read(a.join(rel)).unwrap(),
            std::fs::read(b.join(rel)).unwrap(),
            "{rel} differs between identical synth runs"
        );
    }
}

#[test]
fn calibrate_rejects_missing_manifest() {
    let (_dir, data) = shared_dataset();
    let err = fails(&[
        "calibrate",
        "--manifest",
        "/nonexistent/manifest.csv",
        "--intrinsics",
        &format!("{data}/intrinsics.json"),
        "--theta0",
        &format!("{data}/reference_calibration.json"),
    ]);
    assert!(err.contains("manifest"), "stderr: {err}");
}

#[test]
fn calibration_without_convention_key_is_rejected() {
    let (_dir, data) = shared_dataset();
    let tmp = TempDir::new().unwrap();
    let bad = tmp.path().join("bad.json");
    std::fs::write(
        &bad,
        r#"{"schema_version":1,"rotation_deg":[0,0,0],"translation_m":[0,0,0]}"#,
    )
    .unwrap();
    let err = fails(&[
        "calibrate",
        "--manifest",
        &format!("{data}/manifest.csv"),
        "--intrinsics",
        &format!("{data}/intrinsics.json"),
        "--theta0",
        bad.to_str().unwrap(),
    ]);
    assert!(err.contains("convention"), "stderr: {err}");
}

#[test]
fn monitor_rejects_windows_longer_than_manifest() {
    let (_dir, data) = shared_dataset();
    let tmp = TempDir::new().unwrap();
    let cfg = tmp.path().join("cfg.json");
    std::fs::write(&cfg, r#"{"window":{"length":99,"stride":1}}"#).unwrap();
    let err = fails(&[
        "monitor",
        "--config",
        cfg.to_str().unwrap(),
        "--manifest",
        &format!("{data}/manifest.csv"),
        "--intrinsics",
        &format!("{data}/intrinsics.json"),
        "--theta0",
        &format!("{data}/reference_calibration.json"),
        "--out",
        tmp.path().join("out").to_str().unwrap(),
    ]);
    assert!(err.contains("window length"), "stderr: {err}");
}

#[test]
fn monitor_with_stride_covering_manifest_degenerates_to_calibrate() {
    let (_dir, data) = shared_dataset();
    let tmp = TempDir::new().unwrap();
    let cfg = tmp.path().join("cfg.json");
    std::fs::write(&cfg, r#"{"window":{"length":8,"stride":100}}"#).unwrap();
    let common = [
        "--manifest".to_string(),
        format!("{data}/manifest.csv"),
        "--intrinsics".to_string(),
        format!("{data}/intrinsics.json"),
        "--reference".to_string(),
        format!("{data}/reference_calibration.json"),
    ];

    let mon_out = tmp.path().join("mon");
    let mut args = vec![
        "monitor".to_string(),
        "--config".to_string(),
        cfg.to_str().unwrap().to_string(),
        "--theta0".to_string(),
        format!("{data}/reference_calibration.json"),
        "--out".to_string(),
        mon_out.to_str().unwrap().to_string(),
    ];
    args.extend(common.iter().cloned());
    ok(&args.iter().map(|s| s.as_str()).collect::<Vec<_>>());

    let cal_out = tmp.path().join("cal");
    let mut args = vec![
        "calibrate".to_string(),
        "--config".to_string(),
        cfg.to_str().unwrap().to_string(),
        "--theta0".to_string(),
        format!("{data}/reference_calibration.json"),
        "--out".to_string(),
        cal_out.to_str().unwrap().to_string(),
    ];
    args.extend(common.iter().cloned());
    ok(&args.iter().map(|s| s.as_str()).collect::<Vec<_>>());

    let strip = |p: &Path| {
        let text = std::fs::read_to_string(p).unwrap();
        text.lines()
            .map(|l| {
                let mut cells: Vec<&str> = l.split(',').collect();
                cells.pop();
                cells.join(",")
            })
            .collect::<Vec<_>>()
    };
    assert_eq!(
        strip(&mon_out.join("records.csv")),
        strip(&cal_out.join("records.csv")),
        "single-window monitor differs from one-shot calibrate"
    );
}

#[test]
fn diagnose_without_thresholds_reports_null_verdict() {
    let (_dir, data) = shared_dataset();
    let tmp = TempDir::new().unwrap();
    let stdout = ok(&[
        "diagnose",
        "--manifest",
        &format!("{data}/manifest.csv"),
        "--intrinsics",
        &format!("{data}/intrinsics.json"),
        "--theta",
        &format!("{data}/reference_calibration.json"),
        "--first",
        "4",
        "--out",
        tmp.path().join("out").to_str().unwrap(),
    ]);
    let v: serde_json::Value = serde_json::from_slice(&stdout).unwrap();
    assert!(v["verdict"].is_null());
    assert!(v["report"]["mi_value"].as_f64().unwrap() > 0.0);
}

#[test]
fn failure_study_at_zero_radius_converges_everywhere() {
    let (_dir, data) = shared_dataset();
    let tmp = TempDir::new().unwrap();
    let stdout = ok(&[
        "failure-study",
        "--manifest",
        &format!("{data}/manifest.csv"),
        "--intrinsics",
        &format!("{data}/intrinsics.json"),
        "--reference",
        &format!("{data}/reference_calibration.json"),
        "--trials",
        "3",
        "--radius-deg",
        "0",
        "--first",
        "5",
        "--seed",
        "1",
        "--out",
        tmp.path().join("out").to_str().unwrap(),
    ]);
    let v: serde_json::Value = serde_json::from_slice(&stdout).unwrap();
    assert_eq!(v["converged"], 3);
    assert_eq!(v["under_half_degree"], 3);
}

#[test]
fn bench_with_single_repetition_reports_zero_stddev() {
    let (_dir, data) = shared_dataset();
    let tmp = TempDir::new().unwrap();
    let stdout = ok(&[
        "bench",
        "--manifest",
        &format!("{data}/manifest.csv"),
        "--intrinsics",
        &format!("{data}/intrinsics.json"),
        "--theta0",
        &format!("{data}/reference_calibration.json"),
        "--counts",
        "2,4",
        "--mi-reps",
        "1",
        "--opt-reps",
        "1",
        "--out",
        tmp.path().join("out").to_str().unwrap(),
    ]);
    let rows: serde_json::Value = serde_json::from_slice(&stdout).unwrap();
    for row in rows.as_array().unwrap() {
        assert_eq!(row["mi_std_ms"], 0.0);
        assert_eq!(row["opt_std_ms"], 0.0);
        assert!(row["mi_mean_ms"].as_f64().unwrap() > 0.0);
    }
    // MI time grows with the frame count
    let arr = rows.as_array().unwrap();
    assert!(arr[1]["mi_mean_ms"].as_f64().unwrap() > arr[0]["mi_mean_ms"].as_f64().unwrap());
}
