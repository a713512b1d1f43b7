//! Identification of best-practice melting patterns from induction-furnace
//! telemetry: ingest, melt segmentation, time-series k-means, per-cluster
//! performance metrics, multi-criteria ranking and a best-practice savings
//! projection.

pub mod cli;
pub mod cluster;
pub mod config;
pub mod counterfactual;
pub mod ingest;
pub mod mcdm;
pub mod metrics;
pub mod pipeline;
pub mod plot;
pub mod segment;
pub mod synth;

pub use cluster::{ClusterModel, KMeansParams, Metric, ProfileVector};
pub use config::PipelineConfig;
pub use counterfactual::{BestPracticeProfile, CounterfactualReport};
pub use ingest::{TelemetryFrame, TelemetrySchema};
pub use mcdm::{rank_all, Method, RankingTable};
pub use metrics::DecisionMatrix;
pub use segment::{MeltSegment, SegmentationParams};
