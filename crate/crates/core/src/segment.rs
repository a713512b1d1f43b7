//! Melt segmentation.
//!
//! A melt ends where the furnace is poured: the temperature is at or above
//! a minimum endpoint temperature and falls by at least a minimum amount in a
//! single step. Each melt spans the rows after the previous endpoint up to and
//! including its own endpoint.

use std::path::Path;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ingest::{
    format_timestamp, parse_timestamp, TelemetryFrame, ENERGY_COUNTER, MELT_TEMPERATURE,
    MELT_WEIGHT, POWER,
};

#[derive(Debug, Error)]
pub enum SegmentError {
    #[error("invalid segmentation parameters: {0}")]
    InvalidParams(String),
    #[error("frame has {0} rows; at least 2 are needed")]
    TooFewRows(usize),
    #[error("frame has no melt temperature column")]
    MissingTemperature,
    #[error("row {0} has no temperature; clean the frame first")]
    UncleanedRow(usize),
    #[error("endpoints must be strictly increasing row indices within the frame")]
    InvalidEndpoints,
    #[error("segment ending at row {end_index}: no energy counter or power data")]
    MissingEnergySource { end_index: usize },
    #[error("segment ending at row {end_index}: no melt weight sample")]
    MissingWeight { end_index: usize },
    #[error("segment artifact: {0}")]
    Artifact(String),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SegmentationParams {
    /// Temperature a melt must have reached for a drop to count as a pour.
    pub min_endpoint_temp_c: f64,
    /// Minimum one-step temperature decrease.
    pub min_drop_c: f64,
    pub min_segment_samples: usize,
    pub min_segment_duration_s: f64,
}

impl Default for SegmentationParams {
    fn default() -> Self {
        Self {
            min_endpoint_temp_c: 1400.0,
            min_drop_c: 200.0,
            min_segment_samples: 10,
            min_segment_duration_s: 600.0,
        }
    }
}

impl SegmentationParams {
    pub fn validate(&self) -> Result<(), SegmentError> {
        if !self.min_endpoint_temp_c.is_finite() {
            return Err(SegmentError::InvalidParams(
                "min_endpoint_temp_c must be finite".into(),
            ));
        }
        if !(self.min_drop_c > 0.0 && self.min_drop_c.is_finite()) {
            return Err(SegmentError::InvalidParams("min_drop_c must be > 0".into()));
        }
        if self.min_segment_samples < 2 {
            return Err(SegmentError::InvalidParams(
                "min_segment_samples must be >= 2".into(),
            ));
        }
        if self.min_segment_duration_s.is_nan() || self.min_segment_duration_s < 0.0 {
            return Err(SegmentError::InvalidParams(
                "min_segment_duration_s must be >= 0".into(),
            ));
        }
        Ok(())
    }
}

/// One extracted melt.
#[derive(Debug, Clone, PartialEq)]
pub struct MeltSegment {
    pub id: usize,
    pub start_time: DateTime<Utc>,
    pub end_time: DateTime<Utc>,
    pub samples: Vec<(DateTime<Utc>, f64)>,
    pub duration_s: f64,
    pub energy_kwh: f64,
    pub weight_tonne: f64,
    pub start_index: usize,
    pub end_index: usize,
}

impl MeltSegment {
    pub fn kwh_per_tonne(&self) -> f64 {
        self.energy_kwh / self.weight_tonne
    }
}

pub(crate) fn seconds_between(a: &DateTime<Utc>, b: &DateTime<Utc>) -> f64 {
    (*b - *a).num_milliseconds() as f64 / 1000.0
}

fn temperatures(frame: &TelemetryFrame) -> Result<Vec<f64>, SegmentError> {
    let column = frame
        .column(MELT_TEMPERATURE)
        .ok_or(SegmentError::MissingTemperature)?;
    column
        .iter()
        .enumerate()
        .map(|(i, v)| v.ok_or(SegmentError::UncleanedRow(i)))
        .collect()
}

/// Row indices of melt endpoints. Endpoints closer than
/// `min_segment_samples` rows to the previously kept endpoint are merged into
/// it.
pub fn detect_melt_endpoints(
    frame: &TelemetryFrame,
    params: &SegmentationParams,
) -> Result<Vec<usize>, SegmentError> {
    params.validate()?;
    if frame.len() < 2 {
        return Err(SegmentError::TooFewRows(frame.len()));
    }
    let temps = temperatures(frame)?;
    let mut endpoints: Vec<usize> = Vec::new();
    for i in 0..temps.len() - 1 {
        let is_pour = temps[i] >= params.min_endpoint_temp_c
            && temps[i + 1] - temps[i] <= -params.min_drop_c;
        if !is_pour {
            continue;
        }
        if let Some(&last) = endpoints.last() {
            if i - last < params.min_segment_samples {
                continue;
            }
        }
        endpoints.push(i);
    }
    Ok(endpoints)
}

fn counter_energy(values: &[Option<f64>]) -> Option<f64> {
    let present: Vec<f64> = values.iter().flatten().copied().collect();
    if present.len() < 2 {
        return None;
    }
    // positive increments only, so a counter reset does not produce negative energy
    Some(
        present
            .windows(2)
            .map(|w| (w[1] - w[0]).max(0.0))
            .sum(),
    )
}

fn integrated_power(times: &[DateTime<Utc>], power: &[Option<f64>]) -> Option<f64> {
    let present: Vec<(f64, f64)> = times
        .iter()
        .zip(power)
        .filter_map(|(t, p)| p.map(|p| (t.timestamp_millis() as f64 / 1000.0, p)))
        .collect();
    if present.len() < 2 {
        return None;
    }
    let kws: f64 = present
        .windows(2)
        .map(|w| 0.5 * (w[0].1 + w[1].1) * (w[1].0 - w[0].0))
        .sum();
    Some((kws / 3600.0).max(0.0))
}

/// Cuts the frame into melts at the given endpoints. The trailing rows after
/// the last endpoint are discarded; segments that are too short in samples or
/// duration are skipped.
pub fn extract_melts(
    frame: &TelemetryFrame,
    endpoints: &[usize],
    params: &SegmentationParams,
) -> Result<Vec<MeltSegment>, SegmentError> {
    params.validate()?;
    if endpoints.windows(2).any(|w| w[1] <= w[0])
        || endpoints.last().is_some_and(|&e| e >= frame.len())
    {
        return Err(SegmentError::InvalidEndpoints);
    }
    if endpoints.is_empty() {
        return Ok(Vec::new());
    }
    let temps = temperatures(frame)?;
    let counter = frame.column(ENERGY_COUNTER);
    let power = frame.column(POWER);
    if counter.is_none() && power.is_none() {
        return Err(SegmentError::MissingEnergySource {
            end_index: endpoints[0],
        });
    }
    let weights = frame.column(MELT_WEIGHT);
    let times = frame.timestamps();

    let mut segments = Vec::new();
    let mut start = 0usize;
    for &end in endpoints {
        let range = start..end + 1;
        start = end + 1;
        if range.len() < params.min_segment_samples {
            continue;
        }
        let duration_s = seconds_between(&times[range.start], &times[end]);
        if duration_s <= 0.0 || duration_s < params.min_segment_duration_s {
            continue;
        }
        let energy_kwh = counter
            .and_then(|c| counter_energy(&c[range.clone()]))
            .or_else(|| power.and_then(|p| integrated_power(&times[range.clone()], &p[range.clone()])))
            .ok_or(SegmentError::MissingEnergySource { end_index: end })?;
        let weight_tonne = weights
            .and_then(|w| w[range.clone()].iter().rev().flatten().find(|&&v| v > 0.0).copied())
            .ok_or(SegmentError::MissingWeight { end_index: end })?;
        segments.push(MeltSegment {
            id: segments.len(),
            start_time: times[range.start],
            end_time: times[end],
            samples: range.clone().map(|i| (times[i], temps[i])).collect(),
            duration_s,
            energy_kwh,
            weight_tonne,
            start_index: range.start,
            end_index: end,
        });
    }
    Ok(segments)
}

pub const SEGMENTS_FILE: &str = "segments.csv";
pub const TRACES_DIR: &str = "traces";

fn trace_file_name(id: usize) -> String {
    format!("melt_{id:04}.csv")
}

/// Writes the segment manifest and one temperature trace per melt.
pub fn write_segments(dir: &Path, segments: &[MeltSegment]) -> Result<(), SegmentError> {
    let traces = dir.join(TRACES_DIR);
    std::fs::create_dir_all(&traces)?;
    let mut manifest = csv::Writer::from_path(dir.join(SEGMENTS_FILE))?;
    manifest.write_record([
        "id",
        "start_time",
        "end_time",
        "duration_s",
        "energy_kWh",
        "weight_tonne",
        "start_index",
        "end_index",
    ])?;
    for seg in segments {
        manifest.write_record([
            seg.id.to_string(),
            format_timestamp(&seg.start_time),
            format_timestamp(&seg.end_time),
            seg.duration_s.to_string(),
            seg.energy_kwh.to_string(),
            seg.weight_tonne.to_string(),
            seg.start_index.to_string(),
            seg.end_index.to_string(),
        ])?;
        let mut trace = csv::Writer::from_path(traces.join(trace_file_name(seg.id)))?;
        trace.write_record(["time", "temperature_C"])?;
        for (t, temp) in &seg.samples {
            trace.write_record([format_timestamp(t), temp.to_string()])?;
        }
        trace.flush()?;
    }
    manifest.flush()?;
    Ok(())
}

fn field<T: std::str::FromStr>(record: &csv::StringRecord, idx: usize, what: &str) -> Result<T, SegmentError> {
    record
        .get(idx)
        .and_then(|s| s.trim().parse().ok())
        .ok_or_else(|| SegmentError::Artifact(format!("bad or missing `{what}`")))
}

fn time_field(record: &csv::StringRecord, idx: usize, what: &str) -> Result<DateTime<Utc>, SegmentError> {
    record
        .get(idx)
        .and_then(parse_timestamp)
        .ok_or_else(|| SegmentError::Artifact(format!("bad or missing `{what}`")))
}

/// Reads segments written by [`write_segments`].
pub fn read_segments(dir: &Path) -> Result<Vec<MeltSegment>, SegmentError> {
    let mut manifest = csv::Reader::from_path(dir.join(SEGMENTS_FILE))?;
    let mut segments = Vec::new();
    for record in manifest.records() {
        let record = record?;
        let id: usize = field(&record, 0, "id")?;
        let mut trace = csv::Reader::from_path(dir.join(TRACES_DIR).join(trace_file_name(id)))?;
        let samples = trace
            .records()
            .map(|r| {
                let r = r?;
                Ok((time_field(&r, 0, "time")?, field(&r, 1, "temperature_C")?))
            })
            .collect::<Result<Vec<_>, SegmentError>>()?;
        segments.push(MeltSegment {
            id,
            start_time: time_field(&record, 1, "start_time")?,
            end_time: time_field(&record, 2, "end_time")?,
            samples,
            duration_s: field(&record, 3, "duration_s")?,
            energy_kwh: field(&record, 4, "energy_kWh")?,
            weight_tonne: field(&record, 5, "weight_tonne")?,
            start_index: field(&record, 6, "start_index")?,
            end_index: field(&record, 7, "end_index")?,
        });
    }
    Ok(segments)
}
