//! Targetless camera-LiDAR extrinsic calibration from depth features.
//!
//! The pipeline estimates the rigid transform between a fisheye camera and a
//! LiDAR by maximizing the mutual information between a monocular depth map
//! (relative depth, unknown scale) and the euclidean ranges of the LiDAR
//! points projected into the image. No calibration target is needed, so the
//! estimate can be refreshed continuously from live sensor data, and a set of
//! self-diagnosis metrics classifies each result as success or failure.
//!
//! Module map:
//!
//! - [`geometry`] — extrinsic parameterization, rigid transforms, rotation
//!   error metrics and perturbation sampling
//! - [`camera`] — double-sphere fisheye projection with validity masking
//! - [`features`] — depth maps, point clouds and paired feature extraction
//! - [`mi`] — joint histograms, entropies and the averaged MI objective
//! - [`optimizer`] — bounded derivative-free maximization of the objective
//! - [`diagnostics`] — finite-difference confidence metrics and the
//!   success/failure classifier
//! - [`synthetic`] — deterministic scene generator and sensor simulators used
//!   as a ground-truth oracle
//! - [`io`] — on-disk data model (manifests, point clouds, depth maps,
//!   calibration/config/threshold files)

pub mod camera;
pub mod diagnostics;
mod error;
pub mod features;
pub mod geometry;
pub mod io;
pub mod mi;
pub mod optimizer;
pub mod synthetic;

pub use camera::{DoubleSphereIntrinsics, PixelPoint};
pub use diagnostics::{ClassifierThresholds, DiagnosticsReport, Verdict};
pub use error::{Error, Result};
pub use features::{DepthMap, FeaturePairs, Frame, FrameSet, PointCloud};
pub use geometry::{ExtrinsicParams, RigidTransform};
pub use mi::{JointHistogram, MiConfig};
pub use optimizer::{CalibrationResult, OptimizerConfig};
