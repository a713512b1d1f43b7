//! Stage orchestration. Every stage reads the artifacts of earlier stages
//! from the output directory and finishes by writing a `<stage>.stage.json`
//! sidecar carrying its format tag, so stages can be resumed one at a time.

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};

use log::{info, warn};
use serde::{Deserialize, Serialize};
use serde_json::json;
use thiserror::Error;

use crate::cluster::{
    cluster_sizes, fit_kmeans, quality_metrics, resample_profile, sweep_k, z_normalize, ClusterError, ClusterModel,
    KSweepReport, ProfileVector, SWEEP_FORMAT,
};
use crate::config::PipelineConfig;
use crate::counterfactual::{
    best_cluster, format_percent, percent_changes, project_best_practice, BestPracticeProfile, CounterfactualError,
};
use crate::ingest::{
    clean_telemetry, completeness_report, is_canonical, load_telemetry_with_delimiter, IngestError, TelemetrySchema,
    TIMESTAMP,
};
use crate::mcdm::{rank_all, RankingTable};
use crate::metrics::{
    build_decision_matrix, DecisionMatrix, Direction, EmissionSeries, HourlySeries, MetricsError, PriceSeries,
};
use crate::plot;
use crate::segment::{detect_melt_endpoints, extract_melts, read_segments, write_segments, MeltSegment, SegmentError};

pub const CLEAN_TELEMETRY_FILE: &str = "telemetry.clean.csv";
pub const COMPLETENESS_JSON: &str = "completeness.json";
pub const COMPLETENESS_TXT: &str = "completeness.txt";
pub const SWEEP_JSON: &str = "k_sweep.json";
pub const SWEEP_CSV: &str = "k_sweep.csv";
pub const MODEL_JSON: &str = "cluster_model.json";
pub const ASSIGNMENTS_CSV: &str = "assignments.csv";
pub const CENTROIDS_CSV: &str = "centroids.csv";
pub const SIZES_CSV: &str = "cluster_sizes.csv";
pub const MATRIX_CSV: &str = "decision_matrix.csv";
pub const RANKINGS_CSV: &str = "rankings.csv";
pub const RANKINGS_JSON: &str = "rankings.json";
pub const SAVINGS_CSV: &str = "savings.csv";
pub const SAVINGS_MELTS_CSV: &str = "savings_melts.csv";
pub const SAVINGS_JSON: &str = "savings.json";
pub const PLOTS_DIR: &str = "plots";
pub const LOCK_FILE: &str = ".meltline.lock";

pub const MODEL_FORMAT: &str = "meltline.cluster_model.v1";
pub const RANKINGS_FORMAT: &str = "meltline.rankings.v1";
pub const SAVINGS_FORMAT: &str = "meltline.savings.v1";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    IngestReport,
    Segment,
    SweepK,
    Cluster,
    Matrix,
    Rank,
    Savings,
}

impl Stage {
    pub const ALL: [Stage; 7] = [
        Stage::IngestReport,
        Stage::Segment,
        Stage::SweepK,
        Stage::Cluster,
        Stage::Matrix,
        Stage::Rank,
        Stage::Savings,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Stage::IngestReport => "ingest-report",
            Stage::Segment => "segment",
            Stage::SweepK => "sweep-k",
            Stage::Cluster => "cluster",
            Stage::Matrix => "matrix",
            Stage::Rank => "rank",
            Stage::Savings => "savings",
        }
    }

    pub fn format_tag(self) -> String {
        format!("meltline.stage.{}.v1", self.name())
    }

    fn sidecar(self, out: &Path) -> PathBuf {
        out.join(format!("{}.stage.json", self.name()))
    }
}

#[derive(Debug, Error)]
pub enum StageError {
    #[error("configuration: {0}")]
    Config(String),
    #[error("missing {path}; run `{needs}` first")]
    MissingArtifact { path: PathBuf, needs: &'static str },
    #[error("{path} has format `{found}`, expected `{expected}`")]
    StaleArtifact {
        path: PathBuf,
        found: String,
        expected: String,
    },
    #[error("output directory is locked by {0}; remove it if no other run is active")]
    Locked(PathBuf),
    #[error("the k sweep produced no suggestion; set cluster.k")]
    NoSuggestedK,
    #[error(transparent)]
    Ingest(#[from] IngestError),
    #[error(transparent)]
    Segment(#[from] SegmentError),
    #[error(transparent)]
    Cluster(#[from] ClusterError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error(transparent)]
    Counterfactual(#[from] CounterfactualError),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl StageError {
    /// Short machine-readable category.
    pub fn kind(&self) -> &'static str {
        match self {
            StageError::Config(_) => "config",
            StageError::MissingArtifact { .. } => "missing_artifact",
            StageError::StaleArtifact { .. } => "stale_artifact",
            StageError::Locked(_) => "locked",
            StageError::NoSuggestedK => "no_suggested_k",
            StageError::Ingest(_) => "ingest",
            StageError::Segment(_) => "segment",
            StageError::Cluster(_) => "cluster",
            StageError::Metrics(_) => "metrics",
            StageError::Counterfactual(_) => "counterfactual",
            StageError::Json(_) => "json",
            StageError::Csv(_) => "csv",
            StageError::Io(_) => "io",
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            StageError::Config(_) => 2,
            _ => 1,
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct Sidecar {
    format: String,
    stage: String,
    #[serde(default)]
    summary: serde_json::Value,
}

/// Held for the duration of a run; removes the lock file on drop.
pub struct OutputLock {
    path: PathBuf,
}

impl OutputLock {
    pub fn acquire(out: &Path) -> Result<Self, StageError> {
        fs::create_dir_all(out)?;
        let path = out.join(LOCK_FILE);
        match fs::OpenOptions::new().write(true).create_new(true).open(&path) {
            Ok(_) => Ok(Self { path }),
            Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => Err(StageError::Locked(path)),
            Err(e) => Err(e.into()),
        }
    }
}

impl Drop for OutputLock {
    fn drop(&mut self) {
        let _ = fs::remove_file(&self.path);
    }
}

/// Runs `stages` in order against `config.output.dir` under the lock.
pub fn run_stages(config: &PipelineConfig, stages: &[Stage]) -> Result<(), (Stage, StageError)> {
    let out = &config.output.dir;
    let _lock = OutputLock::acquire(out).map_err(|e| (stages[0], e))?;
    for &stage in stages {
        info!("running stage {}", stage.name());
        run_stage(config, stage).map_err(|e| (stage, e))?;
    }
    Ok(())
}

/// Runs a single stage without taking the lock.
pub fn run_stage(config: &PipelineConfig, stage: Stage) -> Result<(), StageError> {
    let out = config.output.dir.as_path();
    fs::create_dir_all(out)?;
    // a stage that fails must not leave its previous sidecar vouching for
    // half-written artifacts
    let sidecar = stage.sidecar(out);
    if sidecar.exists() {
        fs::remove_file(&sidecar)?;
    }
    let summary = match stage {
        Stage::IngestReport => ingest_stage(config, out)?,
        Stage::Segment => segment_stage(config, out)?,
        Stage::SweepK => sweep_stage(config, out)?,
        Stage::Cluster => cluster_stage(config, out)?,
        Stage::Matrix => matrix_stage(config, out)?,
        Stage::Rank => rank_stage(config, out)?,
        Stage::Savings => savings_stage(config, out)?,
    };
    let record = Sidecar {
        format: stage.format_tag(),
        stage: stage.name().to_string(),
        summary,
    };
    write_json(&sidecar, &record)
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), StageError> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path, needs: &'static str) -> Result<T, StageError> {
    let text = fs::read_to_string(path).map_err(|_| StageError::MissingArtifact {
        path: path.to_path_buf(),
        needs,
    })?;
    Ok(serde_json::from_str(&text)?)
}

/// Fails unless `stage` completed in `out` with the current format tag.
fn require(out: &Path, stage: Stage) -> Result<(), StageError> {
    let path = stage.sidecar(out);
    let record: Sidecar = read_json(&path, stage.name())?;
    let expected = stage.format_tag();
    if record.format != expected {
        return Err(StageError::StaleArtifact {
            path,
            found: record.format,
            expected,
        });
    }
    Ok(())
}

fn check_format(path: &Path, found: &str, expected: &str) -> Result<(), StageError> {
    if found != expected {
        return Err(StageError::StaleArtifact {
            path: path.to_path_buf(),
            found: found.to_string(),
            expected: expected.to_string(),
        });
    }
    Ok(())
}

/// Header of a delimited file, for building an identity schema.
fn header_fields(path: &Path, delimiter: u8) -> Result<Vec<String>, StageError> {
    let mut reader = csv::ReaderBuilder::new().delimiter(delimiter).from_path(path)?;
    Ok(reader.headers()?.iter().map(|h| h.trim().to_string()).collect())
}

fn identity_schema(path: &Path, delimiter: u8) -> Result<TelemetrySchema, StageError> {
    let fields = header_fields(path, delimiter)?;
    let canonical: Vec<&str> = fields
        .iter()
        .map(String::as_str)
        .filter(|f| *f != TIMESTAMP && is_canonical(f))
        .collect();
    for f in &fields {
        if f != TIMESTAMP && !is_canonical(f) {
            warn!("ignoring non-canonical column `{f}`");
        }
    }
    Ok(TelemetrySchema::identity(canonical)?)
}

fn ingest_stage(config: &PipelineConfig, out: &Path) -> Result<serde_json::Value, StageError> {
    let t = &config.telemetry;
    let path = t
        .path
        .as_deref()
        .ok_or_else(|| StageError::Config("telemetry.path is not set".into()))?;
    let delimiter = t.delimiter as u8;
    let schema = if t.schema.is_empty() {
        identity_schema(path, delimiter)?
    } else {
        TelemetrySchema::new(t.schema.clone(), t.required.iter().cloned())?
    };
    let frame = load_telemetry_with_delimiter(path, &schema, delimiter)?;
    let report = completeness_report(&frame)?;
    fs::write(out.join(COMPLETENESS_JSON), report.to_json())?;
    fs::write(out.join(COMPLETENESS_TXT), report.to_table())?;

    let drop: BTreeSet<String> = t.drop.iter().cloned().collect();
    let require: BTreeSet<String> = t.require_present.iter().cloned().collect();
    let cleaned = clean_telemetry(&frame, &drop, &require);
    cleaned.save_csv(&out.join(CLEAN_TELEMETRY_FILE))?;
    let meta = frame.metadata();
    Ok(json!({
        "rows": frame.len(),
        "rows_after_cleaning": cleaned.len(),
        "duplicate_rows_removed": meta.duplicate_rows_removed,
        "unparseable_cells": meta.unparseable_cells,
    }))
}

fn segment_stage(config: &PipelineConfig, out: &Path) -> Result<serde_json::Value, StageError> {
    require(out, Stage::IngestReport)?;
    let path = out.join(CLEAN_TELEMETRY_FILE);
    let schema = identity_schema(&path, b',')?;
    let frame = load_telemetry_with_delimiter(&path, &schema, b',')?;
    let params = &config.segmentation;
    let endpoints = detect_melt_endpoints(&frame, params)?;
    let melts = extract_melts(&frame, &endpoints, params)?;
    info!("{} endpoints, {} melts", endpoints.len(), melts.len());
    write_segments(out, &melts)?;
    Ok(json!({ "endpoints": endpoints.len(), "melts": melts.len() }))
}

fn load_profiles(config: &PipelineConfig, out: &Path) -> Result<(Vec<MeltSegment>, Vec<ProfileVector>), StageError> {
    require(out, Stage::Segment)?;
    let segments = read_segments(out)?;
    let profiles = segments
        .iter()
        .map(|s| {
            let p = resample_profile(s, config.cluster.profile_length)?;
            Ok(if config.cluster.z_normalize { z_normalize(&p) } else { p })
        })
        .collect::<Result<Vec<_>, ClusterError>>()?;
    Ok((segments, profiles))
}

fn sweep_stage(config: &PipelineConfig, out: &Path) -> Result<serde_json::Value, StageError> {
    let (_, profiles) = load_profiles(config, out)?;
    let [lo, mut hi] = config.cluster.k_range;
    if hi > profiles.len() {
        warn!("k range clipped to {} melts", profiles.len());
        hi = profiles.len();
    }
    let report = sweep_k(&profiles, lo..=hi, &config.cluster.params(lo))?;
    write_json(&out.join(SWEEP_JSON), &report)?;

    let mut csv = String::from("k,inertia,distortion,silhouette\n");
    let cell = |v: Option<f64>| v.map_or(String::new(), |v| format!("{v:.5}"));
    for e in &report.per_k {
        csv.push_str(&format!(
            "{},{},{},{}\n",
            e.k,
            cell(e.inertia),
            cell(e.distortion),
            cell(e.silhouette)
        ));
    }
    fs::write(out.join(SWEEP_CSV), csv)?;

    if config.output.plots {
        let dir = out.join(PLOTS_DIR);
        fs::create_dir_all(&dir)?;
        let series = |label: &str, f: fn(&crate::cluster::KSweepEntry) -> Option<f64>| plot::Series {
            label: label.to_string(),
            points: report
                .per_k
                .iter()
                .filter_map(|e| f(e).map(|v| (e.k as f64, v)))
                .collect(),
        };
        fs::write(
            dir.join("k_sweep_distortion.svg"),
            plot::line_chart("Elbow curve", "k", "distortion", &[series("distortion", |e| e.distortion)]),
        )?;
        fs::write(
            dir.join("k_sweep_silhouette.svg"),
            plot::line_chart("Silhouette score", "k", "silhouette", &[series("silhouette", |e| e.silhouette)]),
        )?;
    }
    Ok(json!({ "suggested_k": report.suggested_k, "k_range": [lo, hi] }))
}

#[derive(Serialize, Deserialize)]
struct ModelFile {
    format: String,
    model: ClusterModel,
}

fn read_model(out: &Path) -> Result<ClusterModel, StageError> {
    require(out, Stage::Cluster)?;
    let path = out.join(MODEL_JSON);
    let file: ModelFile = read_json(&path, Stage::Cluster.name())?;
    check_format(&path, &file.format, MODEL_FORMAT)?;
    Ok(file.model)
}

fn cluster_stage(config: &PipelineConfig, out: &Path) -> Result<serde_json::Value, StageError> {
    let (_, profiles) = load_profiles(config, out)?;
    let k = match config.cluster.k {
        Some(k) => k,
        None => {
            require(out, Stage::SweepK)?;
            let path = out.join(SWEEP_JSON);
            let report: KSweepReport = read_json(&path, Stage::SweepK.name())?;
            check_format(&path, &report.format, SWEEP_FORMAT)?;
            report.suggested_k.ok_or(StageError::NoSuggestedK)?
        }
    };
    let model = fit_kmeans(&profiles, &config.cluster.params(k))?;
    let quality = quality_metrics(&model, &profiles)?;
    write_json(
        &out.join(MODEL_JSON),
        &ModelFile {
            format: MODEL_FORMAT.to_string(),
            model: model.clone(),
        },
    )?;

    let mut assignments = String::from("melt_id,cluster\n");
    for (m, c) in model.melt_ids.iter().zip(&model.assignments) {
        assignments.push_str(&format!("{m},{c}\n"));
    }
    fs::write(out.join(ASSIGNMENTS_CSV), assignments)?;

    let mut centroids = String::from("cluster,position,temperature_C\n");
    for (c, centroid) in model.centroids.iter().enumerate() {
        for (i, v) in centroid.iter().enumerate() {
            centroids.push_str(&format!("{c},{i},{v:.5}\n"));
        }
    }
    fs::write(out.join(CENTROIDS_CSV), centroids)?;

    let sizes = cluster_sizes(&model);
    let mut sizes_csv = String::from("cluster,melts\n");
    for (c, n) in sizes.iter().enumerate() {
        sizes_csv.push_str(&format!("{c},{n}\n"));
    }
    fs::write(out.join(SIZES_CSV), sizes_csv)?;

    if config.output.plots {
        let dir = out.join(PLOTS_DIR);
        fs::create_dir_all(&dir)?;
        let series: Vec<plot::Series> = model
            .centroids
            .iter()
            .enumerate()
            .map(|(c, centroid)| plot::Series {
                label: format!("cluster {c}"),
                points: centroid.iter().enumerate().map(|(i, v)| (i as f64, *v)).collect(),
            })
            .collect();
        fs::write(
            dir.join("cluster_profiles.svg"),
            plot::line_chart("Cluster mean profiles", "profile position", "temperature [C]", &series),
        )?;
        let bars: Vec<(String, f64)> = sizes.iter().enumerate().map(|(c, n)| (c.to_string(), *n as f64)).collect();
        fs::write(
            dir.join("cluster_sizes.svg"),
            plot::bar_chart("Melts per cluster", "cluster", "melts", &bars),
        )?;
    }
    Ok(json!({
        "k": k,
        "metric": model.metric.to_string(),
        "converged": model.converged,
        "iterations_run": model.iterations_run,
        "inertia": quality.inertia,
        "distortion": quality.distortion,
        "silhouette": quality.silhouette,
    }))
}

fn load_series(config: &PipelineConfig) -> Result<(PriceSeries, EmissionSeries), StageError> {
    let s = &config.series;
    let prices = match (&s.prices, s.flat_price) {
        (Some(path), _) => HourlySeries::read_csv(path)?,
        (None, Some(v)) => HourlySeries::Flat(v),
        (None, None) => return Err(StageError::Config("series.prices or series.flat_price is required".into())),
    };
    let emissions = match (&s.emissions, s.flat_emission) {
        (Some(path), _) => HourlySeries::read_csv(path)?,
        (None, Some(v)) => HourlySeries::Flat(v),
        (None, None) => {
            return Err(StageError::Config(
                "series.emissions or series.flat_emission is required".into(),
            ))
        }
    };
    Ok((PriceSeries(prices), EmissionSeries::new(emissions)?))
}

fn matrix_stage(config: &PipelineConfig, out: &Path) -> Result<serde_json::Value, StageError> {
    require(out, Stage::Segment)?;
    let model = read_model(out)?;
    let segments = read_segments(out)?;
    let (_, emissions) = load_series(config)?;
    let matrix = build_decision_matrix(
        &model,
        &segments,
        &emissions,
        config.mcdm.tax_dkk_per_kg,
        &config.mcdm.weights,
    )?;
    matrix.write_csv(&out.join(MATRIX_CSV))?;
    Ok(json!({ "alternatives": matrix.rows(), "degenerate_columns": matrix.degenerate_columns() }))
}

/// The matrix named in the config, or the one produced by the `matrix` stage.
fn load_matrix(config: &PipelineConfig, out: &Path) -> Result<DecisionMatrix, StageError> {
    let path = match &config.mcdm.matrix {
        Some(path) => path.clone(),
        None => {
            require(out, Stage::Matrix)?;
            out.join(MATRIX_CSV)
        }
    };
    let weights = &config.mcdm.weights;
    let directions = vec![Direction::Cost; weights.len()];
    Ok(DecisionMatrix::read_csv(&path, &directions, weights)?)
}

#[derive(Serialize, Deserialize)]
struct RankingsFile {
    format: String,
    weights: Vec<f64>,
    vikor_v: f64,
    table: RankingTable,
}

fn rank_stage(config: &PipelineConfig, out: &Path) -> Result<serde_json::Value, StageError> {
    let matrix = load_matrix(config, out)?;
    let table = rank_all(&matrix, &matrix.weights(), config.mcdm.vikor_v);
    fs::write(out.join(RANKINGS_CSV), table.to_csv())?;
    write_json(
        &out.join(RANKINGS_JSON),
        &RankingsFile {
            format: RANKINGS_FORMAT.to_string(),
            weights: matrix.weights(),
            vikor_v: config.mcdm.vikor_v,
            table: table.clone(),
        },
    )?;
    for m in &table.methods {
        if let Some(err) = &m.error {
            warn!("{} unavailable: {err}", m.method);
        }
    }
    Ok(json!({
        "unanimous_best": table.unanimous_best,
        "consensus_best": table.consensus_best,
    }))
}

fn savings_stage(config: &PipelineConfig, out: &Path) -> Result<serde_json::Value, StageError> {
    if config.mcdm.matrix.is_some() {
        return Err(StageError::Config(
            "savings needs the pipeline's own decision matrix; unset mcdm.matrix".into(),
        ));
    }
    require(out, Stage::Rank)?;
    let path = out.join(RANKINGS_JSON);
    let rankings: RankingsFile = read_json(&path, Stage::Rank.name())?;
    check_format(&path, &rankings.format, RANKINGS_FORMAT)?;
    let best = best_cluster(&rankings.table)?;
    let matrix = load_matrix(config, out)?;
    let profile = BestPracticeProfile::from_matrix(&matrix, best)?;
    let model = read_model(out)?;
    require(out, Stage::Segment)?;
    let segments = read_segments(out)?;
    let (prices, emissions) = load_series(config)?;
    let report = project_best_practice(
        &segments,
        &model,
        &profile,
        &prices,
        &emissions,
        config.mcdm.tax_dkk_per_kg,
    )?;
    report.save(&out.join(SAVINGS_CSV), &out.join(SAVINGS_MELTS_CSV))?;
    let pct = percent_changes(&report)?;
    let summary = json!({
        "format": SAVINGS_FORMAT,
        "best_practice": profile,
        "unanimous": rankings.table.unanimous_best.is_some(),
        "tax_DKK_per_kg": report.tax_dkk_per_kg,
        "current": report.current,
        "best_practice_totals": report.best_practice,
        "percent_change": pct,
        "percent_change_display": pct.as_array().map(format_percent),
    });
    write_json(&out.join(SAVINGS_JSON), &summary)?;
    Ok(json!({ "best_cluster": best, "percent_change_total": format_percent(pct.total_cost) }))
}
