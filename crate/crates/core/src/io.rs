//! On-disk data model shared by real-data ingestion and the synthetic
//! generator.
//!
//! Formats:
//! - frame manifest: CSV with header `frame_id,cloud_path,depth_path,timestamp_s`,
//!   paths relative to the manifest's directory
//! - point clouds: binary little-endian float32 `(x, y, z, intensity)`
//!   quadruples; intensity is read and discarded
//! - depth maps: PFM (float32, bottom-up scanlines) or 16-bit grayscale PNG
//!   with a `<file>.scale.json` sidecar; zero or NaN pixels are unmasked
//! - calibration, intrinsics, thresholds and run configuration: JSON, all
//!   versioned with a `schema_version` field, angles in degrees
//!
//! Depth normalization and minimum-range filtering happen once at load so the
//! optimizer's hot loop only touches immutable prepared data.

use std::fs;
use std::io::{BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use nalgebra::Point3;
use serde::{Deserialize, Serialize};

use crate::camera::DoubleSphereIntrinsics;
use crate::diagnostics::{ClassifierThresholds, MetricAxes, SeparationReport};
use crate::features::{DepthMap, Frame, FrameSet, PointCloud};
use crate::geometry::ExtrinsicParams;
use crate::mi::MiConfig;
use crate::optimizer::OptimizerConfig;
use crate::{Error, Result};

pub const SCHEMA_VERSION: u32 = 1;

// ---------------------------------------------------------------------------
// frame manifest
// ---------------------------------------------------------------------------

/// One manifest row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestRecord {
    pub frame_id: u64,
    pub cloud_path: String,
    pub depth_path: String,
    pub timestamp_s: f64,
}

/// Ordered index of a dataset's frames.
#[derive(Debug, Clone)]
pub struct FrameManifest {
    root: PathBuf,
    records: Vec<ManifestRecord>,
}

impl FrameManifest {
    /// Parses and validates a manifest CSV. Frame ids must be strictly
    /// increasing, timestamps non-decreasing, and every referenced file must
    /// exist.
    pub fn load(path: &Path) -> Result<Self> {
        let root = path.parent().unwrap_or(Path::new(".")).to_path_buf();
        let mut reader = csv::Reader::from_path(path).map_err(|e| {
            Error::format(path, format!("cannot open manifest: {e}"))
        })?;
        let mut records = Vec::new();
        for row in reader.deserialize::<ManifestRecord>() {
            let rec = row.map_err(|e| Error::format(path, format!("bad manifest row: {e}")))?;
            records.push(rec);
        }
        let manifest = Self { root, records };
        manifest.validate(path)?;
        Ok(manifest)
    }

    pub fn from_records(root: PathBuf, records: Vec<ManifestRecord>) -> Result<Self> {
        let manifest = Self { root, records };
        manifest.validate(&manifest.root.join("manifest.csv"))?;
        Ok(manifest)
    }

    fn validate(&self, path: &Path) -> Result<()> {
        for pair in self.records.windows(2) {
            if pair[1].frame_id <= pair[0].frame_id {
                return Err(Error::format(
                    path,
                    format!(
                        "frame ids must increase strictly ({} then {})",
                        pair[0].frame_id, pair[1].frame_id
                    ),
                ));
            }
            if pair[1].timestamp_s < pair[0].timestamp_s {
                return Err(Error::format(
                    path,
                    format!(
                        "timestamps must be non-decreasing ({} then {})",
                        pair[0].timestamp_s, pair[1].timestamp_s
                    ),
                ));
            }
        }
        for rec in &self.records {
            for rel in [&rec.cloud_path, &rec.depth_path] {
                let p = self.root.join(rel);
                if !p.exists() {
                    return Err(Error::format(
                        path,
                        format!("frame {} references missing file {}", rec.frame_id, p.display()),
                    ));
                }
            }
        }
        Ok(())
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut writer =
            csv::Writer::from_path(path).map_err(|e| Error::format(path, e.to_string()))?;
        for rec in &self.records {
            writer
                .serialize(rec)
                .map_err(|e| Error::format(path, e.to_string()))?;
        }
        writer.flush().map_err(|e| Error::Load {
            path: path.to_path_buf(),
            source: e,
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn records(&self) -> &[ManifestRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn frame_ids(&self) -> Vec<u64> {
        self.records.iter().map(|r| r.frame_id).collect()
    }

    fn record(&self, id: u64) -> Result<&ManifestRecord> {
        self.records
            .iter()
            .find(|r| r.frame_id == id)
            .ok_or_else(|| Error::Precondition(format!("frame id {id} not in manifest")))
    }
}

/// Options applied while decoding frames.
#[derive(Debug, Clone, Copy)]
pub struct LoadOptions {
    /// Points closer than this to the LiDAR origin are dropped (self-returns
    /// carry no scene information).
    pub min_range_m: f64,
    /// When set, loaded depth maps must match this size.
    pub expected_image_size: Option<(u32, u32)>,
}

impl Default for LoadOptions {
    fn default() -> Self {
        Self {
            min_range_m: 1.0,
            expected_image_size: None,
        }
    }
}

/// Loads the given frames in id order: decoded depth maps (normalized,
/// masked) and point clouds (min-range filtered).
pub fn load_frameset(manifest: &FrameManifest, ids: &[u64], opts: &LoadOptions) -> Result<FrameSet> {
    let mut frames = Vec::with_capacity(ids.len());
    for &id in ids {
        let rec = manifest.record(id)?;
        let cloud_path = manifest.root.join(&rec.cloud_path);
        let depth_path = manifest.root.join(&rec.depth_path);
        let cloud = read_pointcloud_bin(&cloud_path, opts.min_range_m)?;
        let mut depth = read_depth_auto(&depth_path)?;
        if let Some((w, h)) = opts.expected_image_size {
            if depth.width() != w || depth.height() != h {
                return Err(Error::Dimension(format!(
                    "{}: depth map is {}x{}, expected {}x{}",
                    depth_path.display(),
                    depth.width(),
                    depth.height(),
                    w,
                    h
                )));
            }
        }
        depth.min_max_normalize();
        frames.push(Frame { depth, cloud });
    }
    Ok(FrameSet::new(frames))
}

/// Sliding frame-id windows `[k·stride, k·stride + n)` while fully in range.
pub fn sliding_windows(manifest: &FrameManifest, n: usize, stride: usize) -> Result<Vec<Vec<u64>>> {
    if n == 0 || stride == 0 {
        return Err(Error::Precondition("window length and stride must be positive".into()));
    }
    if n > manifest.len() {
        return Err(Error::Precondition(format!(
            "window length {n} exceeds manifest length {}",
            manifest.len()
        )));
    }
    let ids = manifest.frame_ids();
    let mut windows = Vec::new();
    let mut start = 0usize;
    while start + n <= ids.len() {
        windows.push(ids[start..start + n].to_vec());
        start += stride;
    }
    Ok(windows)
}

// ---------------------------------------------------------------------------
// point cloud binary
// ---------------------------------------------------------------------------

/// Reads little-endian float32 `(x, y, z, intensity)` quadruples, dropping
/// points with range below `min_range_m`.
pub fn read_pointcloud_bin(path: &Path, min_range_m: f64) -> Result<PointCloud> {
    let bytes = fs::read(path).map_err(|e| Error::Load {
        path: path.to_path_buf(),
        source: e,
    })?;
    if bytes.len() % 16 != 0 {
        return Err(Error::format(
            path,
            format!("size {} is not a multiple of 16 bytes (float32 x,y,z,intensity)", bytes.len()),
        ));
    }
    let mut points = Vec::with_capacity(bytes.len() / 16);
    for chunk in bytes.chunks_exact(16) {
        let x = f32::from_le_bytes(chunk[0..4].try_into().unwrap()) as f64;
        let y = f32::from_le_bytes(chunk[4..8].try_into().unwrap()) as f64;
        let z = f32::from_le_bytes(chunk[8..12].try_into().unwrap()) as f64;
        // intensity in bytes 12..16 is read and discarded
        if !(x.is_finite() && y.is_finite() && z.is_finite()) {
            return Err(Error::format(path, "non-finite point coordinates".to_string()));
        }
        if (x * x + y * y + z * z).sqrt() < min_range_m {
            continue;
        }
        points.push(Point3::new(x, y, z));
    }
    PointCloud::new(points)
}

pub fn write_pointcloud_bin(path: &Path, cloud: &PointCloud) -> Result<()> {
    let file = fs::File::create(path).map_err(|e| Error::Load {
        path: path.to_path_buf(),
        source: e,
    })?;
    let mut out = BufWriter::new(file);
    let io_err = |e| Error::Load {
        path: path.to_path_buf(),
        source: e,
    };
    for p in cloud.points() {
        for v in [p.x as f32, p.y as f32, p.z as f32, 0.0_f32] {
            out.write_all(&v.to_le_bytes()).map_err(io_err)?;
        }
    }
    out.flush().map_err(io_err)
}

// ---------------------------------------------------------------------------
// depth maps
// ---------------------------------------------------------------------------

fn read_depth_auto(path: &Path) -> Result<DepthMap> {
    match path.extension().and_then(|e| e.to_str()) {
        Some("pfm") => read_depth_pfm(path),
        Some("png") => read_depth_png16(path),
        other => Err(Error::format(
            path,
            format!("unsupported depth extension {other:?} (use .pfm or .png)"),
        )),
    }
}

/// Writes a grayscale PFM (`Pf`, negative scale = little endian, bottom-up
/// scanlines). Unmasked pixels are written as NaN.
pub fn write_depth_pfm(path: &Path, depth: &DepthMap) -> Result<()> {
    let file = fs::File::create(path).map_err(|e| Error::Load {
        path: path.to_path_buf(),
        source: e,
    })?;
    let mut out = BufWriter::new(file);
    let io_err = |e| Error::Load {
        path: path.to_path_buf(),
        source: e,
    };
    write!(out, "Pf\n{} {}\n-1.0\n", depth.width(), depth.height()).map_err(io_err)?;
    for y in (0..depth.height()).rev() {
        for x in 0..depth.width() {
            let v = if depth.is_masked(x, y) {
                depth.value(x, y) as f32
            } else {
                f32::NAN
            };
            out.write_all(&v.to_le_bytes()).map_err(io_err)?;
        }
    }
    out.flush().map_err(io_err)
}

/// Reads a grayscale PFM; zero or NaN pixels become unmasked.
pub fn read_depth_pfm(path: &Path) -> Result<DepthMap> {
    let mut bytes = Vec::new();
    fs::File::open(path)
        .and_then(|mut f| f.read_to_end(&mut bytes))
        .map_err(|e| Error::Load {
            path: path.to_path_buf(),
            source: e,
        })?;
    let bad = |reason: &str| Error::format(path, reason.to_string());

    // header: three whitespace-separated tokens, then a single separator byte
    let mut pos = 0usize;
    let mut token = || -> Result<String> {
        while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if start == pos {
            return Err(Error::format(path, "truncated PFM header".to_string()));
        }
        let t = String::from_utf8_lossy(&bytes[start..pos]).into_owned();
        pos += 1; // single whitespace after each header token
        Ok(t)
    };

    let magic = token()?;
    if magic != "Pf" {
        return Err(bad("not a grayscale PFM (magic != Pf)"));
    }
    let width: u32 = token()?.parse().map_err(|_| bad("bad width"))?;
    let height: u32 = token()?.parse().map_err(|_| bad("bad height"))?;
    let scale: f64 = token()?.parse().map_err(|_| bad("bad scale"))?;
    let little_endian = scale < 0.0;

    let n = width as usize * height as usize;
    let data = &bytes[pos..];
    if data.len() != n * 4 {
        return Err(bad(&format!(
            "payload is {} bytes, expected {}",
            data.len(),
            n * 4
        )));
    }
    let mut values = vec![0.0_f64; n];
    let mut mask = vec![false; n];
    for (i, chunk) in data.chunks_exact(4).enumerate() {
        let raw: [u8; 4] = chunk.try_into().unwrap();
        let v = if little_endian {
            f32::from_le_bytes(raw)
        } else {
            f32::from_be_bytes(raw)
        };
        // bottom-up scanlines
        let row = height as usize - 1 - i / width as usize;
        let col = i % width as usize;
        let idx = row * width as usize + col;
        if v.is_finite() && v != 0.0 {
            values[idx] = f64::from(v);
            mask[idx] = true;
        }
    }
    DepthMap::new(width, height, values, mask)
}

#[derive(Debug, Serialize, Deserialize)]
struct PngScaleSidecar {
    schema_version: u32,
    scale: f64,
}

fn sidecar_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".scale.json");
    PathBuf::from(s)
}

/// Writes a 16-bit grayscale PNG plus its `<file>.scale.json` sidecar.
/// Unmasked pixels are stored as 0; masked values are clamped to raw ≥ 1.
pub fn write_depth_png16(path: &Path, depth: &DepthMap) -> Result<()> {
    let hi = depth
        .values()
        .iter()
        .zip(depth.mask())
        .filter(|(_, m)| **m)
        .map(|(v, _)| *v)
        .fold(0.0_f64, f64::max);
    let scale = if hi > 0.0 { hi / 65535.0 } else { 1.0 / 65535.0 };
    let mut img = image::ImageBuffer::<image::Luma<u16>, Vec<u16>>::new(depth.width(), depth.height());
    for y in 0..depth.height() {
        for x in 0..depth.width() {
            let raw = if depth.is_masked(x, y) {
                ((depth.value(x, y) / scale).round() as u64).clamp(1, 65535) as u16
            } else {
                0
            };
            img.put_pixel(x, y, image::Luma([raw]));
        }
    }
    img.save(path)
        .map_err(|e| Error::format(path, format!("png encode failed: {e}")))?;
    let sidecar = PngScaleSidecar {
        schema_version: SCHEMA_VERSION,
        scale,
    };
    write_json(&sidecar_path(path), &sidecar)
}

/// Reads a 16-bit grayscale PNG with its scale sidecar; zero pixels become
/// unmasked.
pub fn read_depth_png16(path: &Path) -> Result<DepthMap> {
    let sidecar: PngScaleSidecar = read_json(&sidecar_path(path))?;
    let img = image::open(path)
        .map_err(|e| Error::format(path, format!("png decode failed: {e}")))?
        .into_luma16();
    let (w, h) = (img.width(), img.height());
    let mut values = vec![0.0_f64; w as usize * h as usize];
    let mut mask = vec![false; w as usize * h as usize];
    for y in 0..h {
        for x in 0..w {
            let raw = img.get_pixel(x, y)[0];
            if raw != 0 {
                let idx = y as usize * w as usize + x as usize;
                values[idx] = f64::from(raw) * sidecar.scale;
                mask[idx] = true;
            }
        }
    }
    DepthMap::new(w, h, values, mask)
}

// ---------------------------------------------------------------------------
// dataset writer (synthetic and adapters share the same layout)
// ---------------------------------------------------------------------------

/// Writes a frame set as `clouds/NNNNNN.bin` + `depths/NNNNNN.pfm` under
/// `dir` and returns the manifest (also saved as `dir/manifest.csv`).
/// Timestamps are spaced at `1/rate_hz`.
pub fn write_dataset(dir: &Path, frames: &FrameSet, rate_hz: f64) -> Result<FrameManifest> {
    let clouds = dir.join("clouds");
    let depths = dir.join("depths");
    for d in [dir, &clouds, &depths] {
        fs::create_dir_all(d).map_err(|e| Error::Load {
            path: d.to_path_buf(),
            source: e,
        })?;
    }
    let mut records = Vec::with_capacity(frames.len());
    for (i, frame) in frames.frames.iter().enumerate() {
        let cloud_rel = format!("clouds/{i:06}.bin");
        let depth_rel = format!("depths/{i:06}.pfm");
        write_pointcloud_bin(&dir.join(&cloud_rel), &frame.cloud)?;
        write_depth_pfm(&dir.join(&depth_rel), &frame.depth)?;
        records.push(ManifestRecord {
            frame_id: i as u64,
            cloud_path: cloud_rel,
            depth_path: depth_rel,
            timestamp_s: i as f64 / rate_hz,
        });
    }
    let manifest = FrameManifest::from_records(dir.to_path_buf(), records)?;
    manifest.save(&dir.join("manifest.csv"))?;
    Ok(manifest)
}

// ---------------------------------------------------------------------------
// JSON files
// ---------------------------------------------------------------------------

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| Error::Load {
        path: path.to_path_buf(),
        source: e,
    })?;
    serde_json::from_str(&text).map_err(|e| Error::format(path, e.to_string()))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value)
        .map_err(|e| Error::format(path, e.to_string()))?;
    fs::write(path, text + "\n").map_err(|e| Error::Load {
        path: path.to_path_buf(),
        source: e,
    })
}

#[derive(Debug, Serialize, Deserialize)]
struct CalibrationFile {
    #[serde(default = "default_schema_version")]
    schema_version: u32,
    rotation_deg: [f64; 3],
    translation_m: [f64; 3],
    /// Required; readers reject files that do not declare the convention.
    convention: String,
}

fn default_schema_version() -> u32 {
    SCHEMA_VERSION
}

pub const ROTATION_CONVENTION: &str = "fixed-xyz";

/// Reads a calibration file, rejecting a missing or unknown rotation
/// convention.
pub fn read_calibration(path: &Path) -> Result<ExtrinsicParams> {
    let file: CalibrationFile = read_json(path)?;
    if file.convention != ROTATION_CONVENTION {
        return Err(Error::format(
            path,
            format!(
                "unsupported rotation convention {:?} (expected {ROTATION_CONVENTION:?})",
                file.convention
            ),
        ));
    }
    ExtrinsicParams::new(
        [
            file.rotation_deg[0].to_radians(),
            file.rotation_deg[1].to_radians(),
            file.rotation_deg[2].to_radians(),
        ],
        file.translation_m,
    )
}

pub fn write_calibration(path: &Path, params: &ExtrinsicParams) -> Result<()> {
    let r = params.rotation_rad();
    let file = CalibrationFile {
        schema_version: SCHEMA_VERSION,
        rotation_deg: [r[0].to_degrees(), r[1].to_degrees(), r[2].to_degrees()],
        translation_m: params.translation_m(),
        convention: ROTATION_CONVENTION.to_string(),
    };
    write_json(path, &file)
}

#[derive(Debug, Serialize, Deserialize)]
struct IntrinsicsFile {
    #[serde(default = "default_schema_version")]
    schema_version: u32,
    model: String,
    fx: f64,
    fy: f64,
    cx: f64,
    cy: f64,
    #[serde(default)]
    xi: f64,
    #[serde(default)]
    alpha: f64,
    width: u32,
    height: u32,
}

/// Reads an intrinsics file. `model: "pinhole"` is an alias that forces
/// ξ = 0, α = 0.
pub fn read_intrinsics(path: &Path) -> Result<DoubleSphereIntrinsics> {
    let f: IntrinsicsFile = read_json(path)?;
    let (xi, alpha) = match f.model.as_str() {
        "double-sphere" => (f.xi, f.alpha),
        "pinhole" => {
            if f.xi != 0.0 || f.alpha != 0.0 {
                return Err(Error::format(
                    path,
                    "pinhole model must not set xi or alpha".to_string(),
                ));
            }
            (0.0, 0.0)
        }
        other => {
            return Err(Error::format(path, format!("unknown camera model {other:?}")));
        }
    };
    DoubleSphereIntrinsics::new(f.fx, f.fy, f.cx, f.cy, xi, alpha, f.width, f.height)
}

pub fn write_intrinsics(path: &Path, intr: &DoubleSphereIntrinsics) -> Result<()> {
    let file = IntrinsicsFile {
        schema_version: SCHEMA_VERSION,
        model: "double-sphere".to_string(),
        fx: intr.fx,
        fy: intr.fy,
        cx: intr.cx,
        cy: intr.cy,
        xi: intr.xi,
        alpha: intr.alpha,
        width: intr.width,
        height: intr.height,
    };
    write_json(path, &file)
}

/// Thresholds plus how they were fitted.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ThresholdsFile {
    #[serde(default = "default_schema_version")]
    pub schema_version: u32,
    pub mi_lim: f64,
    pub grad_lim: f64,
    pub curv_lim: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fit: Option<ThresholdFitMeta>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ThresholdFitMeta {
    pub truth_reports: usize,
    pub error_reports: usize,
    pub error_radius_deg: f64,
    pub separation: SeparationReport,
}

pub fn read_thresholds(path: &Path) -> Result<(ClassifierThresholds, Option<ThresholdFitMeta>)> {
    let f: ThresholdsFile = read_json(path)?;
    for v in [f.mi_lim, f.grad_lim, f.curv_lim] {
        if !v.is_finite() {
            return Err(Error::format(path, format!("non-finite threshold {v}")));
        }
    }
    Ok((
        ClassifierThresholds {
            mi_lim: f.mi_lim,
            grad_lim: f.grad_lim,
            curv_lim: f.curv_lim,
        },
        f.fit,
    ))
}

pub fn write_thresholds(
    path: &Path,
    thr: &ClassifierThresholds,
    fit: Option<ThresholdFitMeta>,
) -> Result<()> {
    write_json(
        path,
        &ThresholdsFile {
            schema_version: SCHEMA_VERSION,
            mi_lim: thr.mi_lim,
            grad_lim: thr.grad_lim,
            curv_lim: thr.curv_lim,
            fit,
        },
    )
}

// ---------------------------------------------------------------------------
// run configuration
// ---------------------------------------------------------------------------

/// Serialized optimizer settings; angles in degrees at the file boundary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OptimizerFileConfig {
    pub rotation_bound_deg: f64,
    pub translation_bound_m: f64,
    /// Free axes by name: any of `rx, ry, rz, tx, ty, tz`.
    pub free: Vec<String>,
    pub step_tol_rot_deg: f64,
    pub step_tol_trans_m: f64,
    pub max_evals_per_free_param: usize,
    pub initial_radius_scaled: f64,
    pub seed: u64,
}

impl Default for OptimizerFileConfig {
    fn default() -> Self {
        let d = OptimizerConfig::default();
        Self {
            rotation_bound_deg: d.rotation_bound_rad.to_degrees(),
            translation_bound_m: d.translation_bound_m,
            free: vec!["rx".into(), "ry".into(), "rz".into()],
            step_tol_rot_deg: d.step_tol_rot_rad.to_degrees(),
            step_tol_trans_m: d.step_tol_trans_m,
            max_evals_per_free_param: d.max_evals_per_free_param,
            initial_radius_scaled: d.initial_radius_scaled,
            seed: d.seed,
        }
    }
}

pub const AXIS_NAMES: [&str; 6] = ["rx", "ry", "rz", "tx", "ty", "tz"];

impl OptimizerFileConfig {
    pub fn to_optimizer_config(&self) -> Result<OptimizerConfig> {
        let mut free = [false; 6];
        for name in &self.free {
            let idx = AXIS_NAMES
                .iter()
                .position(|a| a == name)
                .ok_or_else(|| Error::InvalidParameter(format!("unknown axis name {name:?}")))?;
            free[idx] = true;
        }
        let cfg = OptimizerConfig {
            rotation_bound_rad: self.rotation_bound_deg.to_radians(),
            translation_bound_m: self.translation_bound_m,
            free,
            step_tol_rot_rad: self.step_tol_rot_deg.to_radians(),
            step_tol_trans_m: self.step_tol_trans_m,
            max_evals_per_free_param: self.max_evals_per_free_param,
            initial_radius_scaled: self.initial_radius_scaled,
            seed: self.seed,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DiagnosticsFileConfig {
    pub h_deg: f64,
    pub axes: MetricAxes,
}

impl Default for DiagnosticsFileConfig {
    fn default() -> Self {
        Self {
            h_deg: 0.25,
            axes: MetricAxes::Rotation,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct WindowFileConfig {
    /// Frames per window (N).
    pub length: usize,
    /// Frames advanced between windows.
    pub stride: usize,
}

impl Default for WindowFileConfig {
    fn default() -> Self {
        Self {
            length: 25,
            stride: 72,
        }
    }
}

/// The single JSON run configuration; every field has a default so `{}` is a
/// valid config, and every CLI flag overrides its key.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub schema_version: u32,
    pub mi: MiConfig,
    pub optimizer: OptimizerFileConfig,
    pub diagnostics: DiagnosticsFileConfig,
    pub window: WindowFileConfig,
    pub thresholds_path: Option<PathBuf>,
    pub min_range_m: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            mi: MiConfig::default(),
            optimizer: OptimizerFileConfig::default(),
            diagnostics: DiagnosticsFileConfig::default(),
            window: WindowFileConfig::default(),
            thresholds_path: None,
            min_range_m: 1.0,
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let cfg: RunConfig = read_json(path)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        write_json(path, self)
    }

    pub fn validate(&self) -> Result<()> {
        self.mi.validate()?;
        self.optimizer.to_optimizer_config()?;
        if self.window.length == 0 || self.window.stride == 0 {
            return Err(Error::InvalidParameter(
                "window length and stride must be at least 1".into(),
            ));
        }
        if !(self.diagnostics.h_deg > 0.0) {
            return Err(Error::InvalidParameter(
                "diagnostics step must be positive".into(),
            ));
        }
        if !(self.min_range_m >= 0.0) {
            return Err(Error::InvalidParameter("min range must be >= 0".into()));
        }
        Ok(())
    }

    pub fn load_options(&self) -> LoadOptions {
        LoadOptions {
            min_range_m: self.min_range_m,
            expected_image_size: None,
        }
    }

    pub fn fd_step_rad(&self) -> f64 {
        self.diagnostics.h_deg.to_radians()
    }
}
