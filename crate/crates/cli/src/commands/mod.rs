pub mod bench;
pub mod calibrate;
pub mod diagnose;
pub mod failure_study;
pub mod fit_thresholds;
pub mod monitor;
pub mod synth;

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context as AnyhowContext, Result};
use micalib::diagnostics::ClassifierThresholds;
use micalib::io::{self, FrameManifest, RunConfig};
use micalib::{DoubleSphereIntrinsics, ExtrinsicParams};

/// Global flags shared by every subcommand.
pub struct Context {
    pub config_path: Option<PathBuf>,
    pub seed: Option<u64>,
    pub out: PathBuf,
}

impl Context {
    /// Loads the run configuration, applying the global seed override, and
    /// writes the effective config next to the results.
    pub fn load_config(&self) -> Result<RunConfig> {
        let mut cfg = match &self.config_path {
            Some(path) => RunConfig::load(path)
                .with_context(|| format!("loading config {}", path.display()))?,
            None => RunConfig::default(),
        };
        if let Some(seed) = self.seed {
            cfg.optimizer.seed = seed;
        }
        Ok(cfg)
    }

    pub fn write_resolved_config(&self, cfg: &RunConfig) -> Result<()> {
        fs::create_dir_all(&self.out)
            .with_context(|| format!("creating {}", self.out.display()))?;
        cfg.save(&self.out.join("resolved_config.json"))?;
        Ok(())
    }

    pub fn seed(&self, cfg: &RunConfig) -> u64 {
        self.seed.unwrap_or(cfg.optimizer.seed)
    }
}

pub fn load_manifest(path: &Path) -> Result<FrameManifest> {
    FrameManifest::load(path).with_context(|| format!("loading manifest {}", path.display()))
}

pub fn load_intrinsics(path: &Path) -> Result<DoubleSphereIntrinsics> {
    io::read_intrinsics(path).with_context(|| format!("loading intrinsics {}", path.display()))
}

pub fn load_calibration(path: &Path) -> Result<ExtrinsicParams> {
    io::read_calibration(path)
        .with_context(|| format!("loading calibration {}", path.display()))
}

/// Loads thresholds from the flag if given, otherwise from the config's
/// `thresholds_path`; `None` when neither is set.
pub fn load_thresholds(
    flag: &Option<PathBuf>,
    cfg: &RunConfig,
) -> Result<Option<ClassifierThresholds>> {
    let path = flag.as_ref().or(cfg.thresholds_path.as_ref());
    match path {
        None => Ok(None),
        Some(p) => {
            let (thr, _) = io::read_thresholds(p)
                .with_context(|| format!("loading thresholds {}", p.display()))?;
            Ok(Some(thr))
        }
    }
}
