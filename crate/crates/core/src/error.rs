use std::path::PathBuf;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

/// Errors raised by the calibration pipeline.
///
/// Invalid projections are not errors (see [`crate::camera::PixelPoint`]);
/// everything here signals either bad input data or a state from which the
/// pipeline cannot produce a meaningful result.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A parameter violated its type invariants (non-finite value, bound out
    /// of range, ...).
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// No LiDAR point projected onto a masked depth pixel. Signals disjoint
    /// fields of view or a wildly wrong extrinsic guess.
    #[error("empty overlap: no lidar point projected onto a valid depth pixel")]
    EmptyOverlap,

    /// An operation precondition was not met.
    #[error("precondition violated: {0}")]
    Precondition(String),

    /// A probability vector was not a distribution (negative mass or sum far
    /// from one).
    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    /// The objective returned a non-finite value during optimization.
    #[error("optimization aborted: {0}")]
    AbortedOptimization(String),

    /// Threshold fitting found overlapping metric distributions on all three
    /// metrics.
    #[error("no separating threshold: {0}")]
    NoSeparatingThreshold(String),

    /// A referenced file could not be read or written.
    #[error("failed to access {path}: {source}")]
    Load {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// A file was readable but malformed.
    #[error("malformed file {path}: {reason}")]
    Format { path: PathBuf, reason: String },

    /// Loaded data disagrees with the expected dimensions.
    #[error("dimension mismatch: {0}")]
    Dimension(String),
}

impl Error {
    pub(crate) fn format(path: impl Into<PathBuf>, reason: impl Into<String>) -> Self {
        Error::Format {
            path: path.into(),
            reason: reason.into(),
        }
    }
}
