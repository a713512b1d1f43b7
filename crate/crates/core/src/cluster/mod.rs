//! Time-series K-means over melt temperature profiles.
//!
//! Profiles are fixed-length resamplings of each melt's temperature trace.
//! Clustering runs under Euclidean distance or DTW (with an optional
//! Sakoe-Chiba band); centroids are pointwise means or DTW barycenters
//! respectively.

mod distance;
mod kmeans;
mod profile;
mod quality;
mod sweep;

use thiserror::Error;

pub use distance::{distance, dtw, dtw_path, euclidean, Metric};
pub use kmeans::{dba_update, fit_kmeans, ClusterModel, KMeansParams, DBA_ITERATIONS};
pub use profile::{resample_profile, z_normalize, ProfileVector};
pub use quality::{adjusted_rand_index, cluster_sizes, quality_metrics, silhouette, QualityMetrics};
pub use sweep::{derive_seed, sweep_k, KSweepEntry, KSweepReport, SWEEP_FORMAT};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ClusterError {
    #[error("profiles have different lengths ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("segment {0} has zero duration")]
    DegenerateSegment(usize),
    #[error("segment {0} has fewer than 2 samples")]
    TooFewSamples(usize),
    #[error("profile length must be at least {min}, got {got}")]
    InvalidLength { min: usize, got: usize },
    #[error("profile {0} contains non-finite values")]
    NonFinite(usize),
    #[error("k = {k} exceeds the number of profiles ({n})")]
    TooFewProfiles { k: usize, n: usize },
    #[error("all profiles are identical; cannot form {0} distinct clusters")]
    AllIdentical(usize),
    #[error("invalid parameter: {0}")]
    InvalidParams(String),
    #[error("silhouette is undefined for a single cluster")]
    SingleCluster,
    #[error("k range {lo}..={hi} must lie within [2, {n}]")]
    InvalidKRange { lo: usize, hi: usize, n: usize },
    #[error("model does not match the profiles it is evaluated on")]
    ModelMismatch,
}
