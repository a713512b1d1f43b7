//! Per-melt costing against hourly price and emission series, and the
//! per-cluster decision matrix.

use std::collections::BTreeMap;
use std::path::Path;

use chrono::{DateTime, Duration, DurationRound, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cluster::ClusterModel;
use crate::ingest::{format_timestamp, parse_timestamp};
use crate::segment::MeltSegment;

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("series has no value for the hour starting {0}")]
    SeriesGap(String),
    #[error("series is not hourly-contiguous at row {0}")]
    NonContiguous(usize),
    #[error("series value at row {row} is invalid: {reason}")]
    InvalidValue { row: usize, reason: String },
    #[error("series file is empty")]
    EmptySeries,
    #[error("melt {0} is not assigned in the cluster model")]
    Unassigned(usize),
    #[error("cluster {0} has no member melts")]
    EmptyCluster(usize),
    #[error("weights sum to zero")]
    ZeroWeightSum,
    #[error("invalid weights: {0}")]
    InvalidWeights(String),
    #[error("invalid decision matrix: {0}")]
    InvalidMatrix(String),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Values per clock hour. `Flat` covers every hour with one value.
#[derive(Debug, Clone, PartialEq)]
pub enum HourlySeries {
    Hourly {
        start: DateTime<Utc>,
        values: Vec<f64>,
    },
    Flat(f64),
}

impl HourlySeries {
    pub fn hourly(start: DateTime<Utc>, values: Vec<f64>) -> Result<Self, MetricsError> {
        if start.duration_trunc(Duration::hours(1)).ok() != Some(start) {
            return Err(MetricsError::InvalidValue {
                row: 0,
                reason: "hour_start is not on an hour boundary".into(),
            });
        }
        if let Some(row) = values.iter().position(|v| !v.is_finite()) {
            return Err(MetricsError::InvalidValue {
                row,
                reason: "non-finite".into(),
            });
        }
        Ok(Self::Hourly { start, values })
    }

    pub fn value_at(&self, hour_start: DateTime<Utc>) -> Option<f64> {
        match self {
            Self::Flat(v) => Some(*v),
            Self::Hourly { start, values } => {
                let offset = (hour_start - *start).num_hours();
                if hour_start < *start || offset < 0 {
                    return None;
                }
                values.get(offset as usize).copied()
            }
        }
    }

    /// Reads a two-column `hour_start,value` CSV with a header row.
    pub fn read_csv(path: &Path) -> Result<Self, MetricsError> {
        let mut reader = csv::Reader::from_path(path)?;
        let mut start = None;
        let mut values = Vec::new();
        for (row, record) in reader.records().enumerate() {
            let record = record?;
            let hour = record
                .get(0)
                .and_then(parse_timestamp)
                .ok_or_else(|| MetricsError::InvalidValue {
                    row,
                    reason: "bad hour_start".into(),
                })?;
            let value: f64 = record
                .get(1)
                .and_then(|v| v.trim().parse().ok())
                .ok_or_else(|| MetricsError::InvalidValue {
                    row,
                    reason: "bad value".into(),
                })?;
            let first = *start.get_or_insert(hour);
            if hour != first + Duration::hours(row as i64) {
                return Err(MetricsError::NonContiguous(row));
            }
            values.push(value);
        }
        let start = start.ok_or(MetricsError::EmptySeries)?;
        Self::hourly(start, values)
    }

    pub fn write_csv(&self, path: &Path, value_name: &str) -> Result<(), MetricsError> {
        let Self::Hourly { start, values } = self else {
            return Err(MetricsError::InvalidValue {
                row: 0,
                reason: "flat series has no hourly rows".into(),
            });
        };
        let mut writer = csv::Writer::from_path(path)?;
        writer.write_record(["hour_start", value_name])?;
        for (i, v) in values.iter().enumerate() {
            writer.write_record([
                format_timestamp(&(*start + Duration::hours(i as i64))),
                v.to_string(),
            ])?;
        }
        writer.flush()?;
        Ok(())
    }
}

/// Spot price in DKK/kWh.
#[derive(Debug, Clone, PartialEq)]
pub struct PriceSeries(pub HourlySeries);

/// Grid carbon intensity in kg CO₂/kWh.
#[derive(Debug, Clone, PartialEq)]
pub struct EmissionSeries(HourlySeries);

impl EmissionSeries {
    pub fn new(series: HourlySeries) -> Result<Self, MetricsError> {
        let negative = match &series {
            HourlySeries::Flat(v) => (*v < 0.0).then_some(0),
            HourlySeries::Hourly { values, .. } => values.iter().position(|v| *v < 0.0),
        };
        if let Some(row) = negative {
            return Err(MetricsError::InvalidValue {
                row,
                reason: "negative intensity".into(),
            });
        }
        Ok(Self(series))
    }

    pub fn series(&self) -> &HourlySeries {
        &self.0
    }
}

/// Energy-weighted hourly sum of `series` over a window with energy spread
/// uniformly across it.
fn spread_over_hours(
    start: DateTime<Utc>,
    duration_s: f64,
    energy_kwh: f64,
    series: &HourlySeries,
) -> Result<f64, MetricsError> {
    if duration_s <= 0.0 {
        return Err(MetricsError::InvalidValue {
            row: 0,
            reason: "window duration must be positive".into(),
        });
    }
    let t0 = start.timestamp_millis() as f64 / 1000.0;
    let t1 = t0 + duration_s;
    let first_hour = (t0 / 3600.0).floor() as i64;
    let mut total = 0.0;
    let mut hour = first_hour;
    while (hour as f64) * 3600.0 < t1 {
        let h0 = hour as f64 * 3600.0;
        let overlap = (t1.min(h0 + 3600.0) - t0.max(h0)).max(0.0);
        let hour_start = DateTime::from_timestamp(hour * 3600, 0).expect("in range");
        let value = series
            .value_at(hour_start)
            .ok_or_else(|| MetricsError::SeriesGap(format_timestamp(&hour_start)))?;
        total += energy_kwh * (overlap / duration_s) * value;
        hour += 1;
    }
    Ok(total)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostEmissions {
    pub cost_dkk: f64,
    pub co2_kg: f64,
}

/// Prices an arbitrary window, spreading `energy_kwh` uniformly.
pub fn window_cost_and_emissions(
    start: DateTime<Utc>,
    duration_s: f64,
    energy_kwh: f64,
    prices: &PriceSeries,
    emissions: &EmissionSeries,
) -> Result<CostEmissions, MetricsError> {
    Ok(CostEmissions {
        cost_dkk: spread_over_hours(start, duration_s, energy_kwh, &prices.0)?,
        co2_kg: spread_over_hours(start, duration_s, energy_kwh, &emissions.0)?,
    })
}

pub fn melt_cost_and_emissions(
    segment: &MeltSegment,
    prices: &PriceSeries,
    emissions: &EmissionSeries,
) -> Result<CostEmissions, MetricsError> {
    window_cost_and_emissions(
        segment.start_time,
        segment.duration_s,
        segment.energy_kwh,
        prices,
        emissions,
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Cost,
    Benefit,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriterionSpec {
    pub name: String,
    pub direction: Direction,
    pub weight: f64,
}

/// Criterion column names, in decision-matrix order.
pub const CRITERIA: [&str; 4] = [
    "avg_production_time_s",
    "avg_electricity_kWh",
    "avg_energy_specific_kWh_per_tonne",
    "carbon_tax_DKK",
];

/// Alternatives × criteria table.
#[derive(Debug, Clone, PartialEq)]
pub struct DecisionMatrix {
    pub alternatives: Vec<usize>,
    pub criteria: Vec<CriterionSpec>,
    pub values: Vec<Vec<f64>>,
}

/// Rescales non-negative weights to sum to one.
pub fn normalize_weights(weights: &[f64]) -> Result<Vec<f64>, MetricsError> {
    if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
        return Err(MetricsError::InvalidWeights("weights must be finite and >= 0".into()));
    }
    let sum: f64 = weights.iter().sum();
    if sum <= 0.0 {
        return Err(MetricsError::ZeroWeightSum);
    }
    Ok(weights.iter().map(|w| w / sum).collect())
}

impl DecisionMatrix {
    pub fn new(
        alternatives: Vec<usize>,
        criteria: Vec<CriterionSpec>,
        values: Vec<Vec<f64>>,
    ) -> Result<Self, MetricsError> {
        if alternatives.is_empty() || criteria.is_empty() {
            return Err(MetricsError::InvalidMatrix("matrix has no alternatives or no criteria".into()));
        }
        if values.len() != alternatives.len() || values.iter().any(|r| r.len() != criteria.len()) {
            return Err(MetricsError::InvalidMatrix("shape does not match alternatives × criteria".into()));
        }
        if values.iter().flatten().any(|v| !v.is_finite()) {
            return Err(MetricsError::InvalidMatrix("values must be finite".into()));
        }
        let mut seen = std::collections::BTreeSet::new();
        if !alternatives.iter().all(|a| seen.insert(a)) {
            return Err(MetricsError::InvalidMatrix("duplicate alternative id".into()));
        }
        let sum: f64 = criteria.iter().map(|c| c.weight).sum();
        if criteria.iter().any(|c| !(0.0..=1.0).contains(&c.weight)) || (sum - 1.0).abs() > 1e-9 {
            return Err(MetricsError::InvalidWeights(format!(
                "criterion weights must lie in [0, 1] and sum to 1 (sum = {sum})"
            )));
        }
        Ok(Self {
            alternatives,
            criteria,
            values,
        })
    }

    pub fn rows(&self) -> usize {
        self.alternatives.len()
    }

    pub fn cols(&self) -> usize {
        self.criteria.len()
    }

    pub fn column(&self, j: usize) -> impl Iterator<Item = f64> + '_ {
        self.values.iter().map(move |r| r[j])
    }

    pub fn weights(&self) -> Vec<f64> {
        self.criteria.iter().map(|c| c.weight).collect()
    }

    pub fn row_of(&self, alternative: usize) -> Option<&[f64]> {
        self.alternatives
            .iter()
            .position(|&a| a == alternative)
            .map(|i| self.values[i].as_slice())
    }

    /// Columns whose entries are all zero; vector normalization is undefined
    /// for them.
    pub fn degenerate_columns(&self) -> Vec<usize> {
        (0..self.cols())
            .filter(|&j| self.column(j).all(|v| v == 0.0))
            .collect()
    }

    pub fn with_weights(&self, weights: &[f64]) -> Result<Self, MetricsError> {
        if weights.len() != self.cols() {
            return Err(MetricsError::InvalidWeights(format!(
                "expected {} weights, got {}",
                self.cols(),
                weights.len()
            )));
        }
        let weights = normalize_weights(weights)?;
        let criteria = self
            .criteria
            .iter()
            .zip(weights)
            .map(|(c, weight)| CriterionSpec { weight, ..c.clone() })
            .collect();
        Self::new(self.alternatives.clone(), criteria, self.values.clone())
    }

    /// Writes `cluster,<criterion names...>` with full-precision values.
    pub fn write_csv(&self, path: &Path) -> Result<(), MetricsError> {
        let mut writer = csv::Writer::from_path(path)?;
        let mut header = vec!["cluster".to_string()];
        header.extend(self.criteria.iter().map(|c| c.name.clone()));
        writer.write_record(&header)?;
        for (alt, row) in self.alternatives.iter().zip(&self.values) {
            let mut record = vec![alt.to_string()];
            record.extend(row.iter().map(f64::to_string));
            writer.write_record(&record)?;
        }
        writer.flush()?;
        Ok(())
    }

    /// Reads a matrix CSV: first column is the alternative id, remaining
    /// columns are criteria. Directions and weights are supplied by the caller.
    pub fn read_csv(path: &Path, directions: &[Direction], weights: &[f64]) -> Result<Self, MetricsError> {
        let mut reader = csv::Reader::from_path(path)?;
        let header = reader.headers()?.clone();
        let names: Vec<String> = header.iter().skip(1).map(|s| s.trim().to_string()).collect();
        if names.len() != directions.len() || names.len() != weights.len() {
            return Err(MetricsError::InvalidMatrix(format!(
                "{} criteria in file, {} directions, {} weights",
                names.len(),
                directions.len(),
                weights.len()
            )));
        }
        let mut alternatives = Vec::new();
        let mut values = Vec::new();
        for (row, record) in reader.records().enumerate() {
            let record = record?;
            let parse = |s: &str| s.trim().parse::<f64>().ok();
            let alt = record
                .get(0)
                .and_then(|s| s.trim().parse::<usize>().ok())
                .ok_or_else(|| MetricsError::InvalidValue { row, reason: "bad alternative id".into() })?;
            let vals = record
                .iter()
                .skip(1)
                .map(|s| parse(s).ok_or_else(|| MetricsError::InvalidValue { row, reason: format!("bad number `{s}`") }))
                .collect::<Result<Vec<f64>, _>>()?;
            alternatives.push(alt);
            values.push(vals);
        }
        let weights = normalize_weights(weights)?;
        let criteria = names
            .into_iter()
            .zip(directions)
            .zip(weights)
            .map(|((name, &direction), weight)| CriterionSpec { name, direction, weight })
            .collect();
        Self::new(alternatives, criteria, values)
    }
}

fn melt_co2(segment: &MeltSegment, emissions: &EmissionSeries) -> Result<f64, MetricsError> {
    spread_over_hours(segment.start_time, segment.duration_s, segment.energy_kwh, &emissions.0)
}

/// One row per non-empty cluster: mean duration, mean energy, mean of
/// per-melt kWh/tonne and mean per-melt carbon tax. All criteria are costs.
pub fn build_decision_matrix(
    model: &ClusterModel,
    segments: &[MeltSegment],
    emissions: &EmissionSeries,
    tax_dkk_per_kg: f64,
    weights: &[f64],
) -> Result<DecisionMatrix, MetricsError> {
    if weights.len() != CRITERIA.len() {
        return Err(MetricsError::InvalidWeights(format!("expected 4 weights, got {}", weights.len())));
    }
    let weights = normalize_weights(weights)?;
    let mut by_cluster: BTreeMap<usize, Vec<&MeltSegment>> = BTreeMap::new();
    for seg in segments {
        let cluster = model.cluster_of(seg.id).ok_or(MetricsError::Unassigned(seg.id))?;
        by_cluster.entry(cluster).or_default().push(seg);
    }
    let mut alternatives = Vec::new();
    let mut values = Vec::new();
    for (cluster, mut members) in by_cluster {
        // fixed summation order regardless of input order
        members.sort_by_key(|s| s.id);
        let n = members.len() as f64;
        let mean = |f: &dyn Fn(&MeltSegment) -> Result<f64, MetricsError>| -> Result<f64, MetricsError> {
            let mut sum = 0.0;
            for m in &members {
                sum += f(m)?;
            }
            Ok(sum / n)
        };
        let row = vec![
            mean(&|s| Ok(s.duration_s))?,
            mean(&|s| Ok(s.energy_kwh))?,
            mean(&|s| Ok(s.kwh_per_tonne()))?,
            mean(&|s| Ok(melt_co2(s, emissions)? * tax_dkk_per_kg))?,
        ];
        alternatives.push(cluster);
        values.push(row);
    }
    if alternatives.is_empty() {
        return Err(MetricsError::InvalidMatrix("no segments".into()));
    }
    let criteria = CRITERIA
        .iter()
        .zip(weights)
        .map(|(name, weight)| CriterionSpec {
            name: name.to_string(),
            direction: Direction::Cost,
            weight,
        })
        .collect();
    DecisionMatrix::new(alternatives, criteria, values)
}

#[cfg(test)]
mod tests {
    use chrono::Duration;

    use super::*;
    use crate::cluster::Metric;

    fn t(s: &str) -> DateTime<Utc> {
        parse_timestamp(s).unwrap()
    }

    fn melt(id: usize, start: &str, duration_s: f64, energy: f64, weight: f64) -> MeltSegment {
        let st = t(start);
        let end = st + Duration::milliseconds((duration_s * 1000.0) as i64);
        MeltSegment {
            id,
            start_time: st,
            end_time: end,
            samples: vec![(st, 600.0), (end, 1500.0)],
            duration_s,
            energy_kwh: energy,
            weight_tonne: weight,
            start_index: 0,
            end_index: 1,
        }
    }

    fn flat(price: f64, intensity: f64) -> (PriceSeries, EmissionSeries) {
        (
            PriceSeries(HourlySeries::Flat(price)),
            EmissionSeries::new(HourlySeries::Flat(intensity)).unwrap(),
        )
    }

    fn single_model(ids: &[usize], assignments: &[usize]) -> ClusterModel {
        let k = assignments.iter().max().unwrap() + 1;
        ClusterModel {
            k,
            metric: Metric::Euclidean,
            centroids: vec![vec![0.0; 2]; k],
            melt_ids: ids.to_vec(),
            assignments: assignments.to_vec(),
            seed: 0,
            iterations_run: 1,
            converged: true,
            inertia: 0.0,
            inertia_trace: vec![],
        }
    }

    #[test]
    fn one_hour_flat_rates() {
        let (p, e) = flat(0.5, 0.2);
        let r = melt_cost_and_emissions(&melt(0, "2022-05-11T00:00:00Z", 3600.0, 100.0, 1.0), &p, &e).unwrap();
        assert!((r.cost_dkk - 50.0).abs() < 1e-12);
        assert!((r.co2_kg - 20.0).abs() < 1e-12);
    }

    #[test]
    fn two_hour_split() {
        // 45 min in the first hour, 15 min in the second
        let start = t("2022-05-11T00:00:00Z");
        let prices = PriceSeries(HourlySeries::hourly(start, vec![1.0, 2.0]).unwrap());
        let e = EmissionSeries::new(HourlySeries::hourly(start, vec![0.0, 0.0]).unwrap()).unwrap();
        let r = melt_cost_and_emissions(&melt(0, "2022-05-11T00:15:00Z", 3600.0, 100.0, 1.0), &prices, &e).unwrap();
        assert!((r.cost_dkk - 125.0).abs() < 1e-9);
    }

    #[test]
    fn zero_energy_is_free() {
        let (p, e) = flat(0.5, 0.2);
        let r = melt_cost_and_emissions(&melt(0, "2022-05-11T00:00:00Z", 1200.0, 0.0, 1.0), &p, &e).unwrap();
        assert_eq!((r.cost_dkk, r.co2_kg), (0.0, 0.0));
    }

    #[test]
    fn gap_is_reported() {
        let start = t("2022-05-11T00:00:00Z");
        let prices = PriceSeries(HourlySeries::hourly(start, vec![1.0]).unwrap());
        let e = EmissionSeries::new(HourlySeries::Flat(0.1)).unwrap();
        let err = melt_cost_and_emissions(&melt(0, "2022-05-11T00:30:00Z", 3600.0, 1.0, 1.0), &prices, &e).unwrap_err();
        assert!(matches!(err, MetricsError::SeriesGap(ref h) if h == "2022-05-11T01:00:00Z"));
    }

    #[test]
    fn series_csv_round_trip_and_contiguity() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("p.csv");
        let s = HourlySeries::hourly(t("2022-05-11T00:00:00Z"), vec![0.1, 0.25, 3.0]).unwrap();
        s.write_csv(&path, "price").unwrap();
        assert_eq!(HourlySeries::read_csv(&path).unwrap(), s);
        std::fs::write(&path, "hour_start,v\n2022-05-11T00:00:00Z,1\n2022-05-11T02:00:00Z,1\n").unwrap();
        assert!(matches!(HourlySeries::read_csv(&path), Err(MetricsError::NonContiguous(1))));
        assert!(EmissionSeries::new(HourlySeries::Flat(-1.0)).is_err());
    }

    #[test]
    fn single_melt_matrix_row() {
        let segs = [melt(0, "2022-05-11T00:00:00Z", 3600.0, 5000.0, 9.3)];
        let (_, e) = flat(1.0, 0.1);
        let m = build_decision_matrix(&single_model(&[0], &[0]), &segs, &e, 0.75, &[0.25; 4]).unwrap();
        assert_eq!(m.alternatives, vec![0]);
        let row = &m.values[0];
        assert_eq!(row[0], 3600.0);
        assert_eq!(row[1], 5000.0);
        assert!((row[2] - 537.634_408_602_150_5).abs() < 1e-9);
        assert!((row[3] - 375.0).abs() < 1e-9);
        assert!(m.criteria.iter().all(|c| c.direction == Direction::Cost));
    }

    #[test]
    fn energy_specific_is_mean_of_ratios() {
        let segs = [
            melt(0, "2022-05-11T00:00:00Z", 3600.0, 1000.0, 1.0),
            melt(1, "2022-05-11T02:00:00Z", 3600.0, 3000.0, 10.0),
        ];
        let (_, e) = flat(1.0, 0.1);
        let m = build_decision_matrix(&single_model(&[0, 1], &[0, 0]), &segs, &e, 0.75, &[0.25; 4]).unwrap();
        let mean_of_ratios = (1000.0 + 300.0) / 2.0;
        let ratio_of_means = 2000.0 / 5.5;
        assert_eq!(m.values[0][2], mean_of_ratios);
        assert_ne!(m.values[0][2], ratio_of_means);
    }

    #[test]
    fn flat_intensity_column_four_is_scaled_energy() {
        let segs: Vec<MeltSegment> = (0..6)
            .map(|i| melt(i, "2022-05-11T00:00:00Z", 1800.0 + 600.0 * i as f64, 4000.0 + 250.0 * i as f64, 8.0))
            .collect();
        let (_, e) = flat(1.0, 0.125);
        let model = single_model(&[0, 1, 2, 3, 4, 5], &[0, 1, 0, 2, 1, 2]);
        let m = build_decision_matrix(&model, &segs, &e, 0.5, &[1.0, 1.0, 1.0, 1.0]).unwrap();
        assert_eq!(m.rows(), 3);
        for row in &m.values {
            assert!((row[3] - row[1] * 0.125 * 0.5).abs() < 1e-9);
        }
        // reordering segments leaves the matrix unchanged
        let mut reversed = segs.clone();
        reversed.reverse();
        assert_eq!(build_decision_matrix(&model, &reversed, &e, 0.5, &[1.0; 4]).unwrap(), m);
    }

    #[test]
    fn zero_tax_gives_degenerate_column() {
        let segs = [melt(0, "2022-05-11T00:00:00Z", 3600.0, 5000.0, 9.3)];
        let (_, e) = flat(1.0, 0.1);
        let m = build_decision_matrix(&single_model(&[0], &[0]), &segs, &e, 0.0, &[0.25; 4]).unwrap();
        assert_eq!(m.degenerate_columns(), vec![3]);
    }

    #[test]
    fn weight_errors() {
        let segs = [melt(0, "2022-05-11T00:00:00Z", 3600.0, 5000.0, 9.3)];
        let (_, e) = flat(1.0, 0.1);
        let model = single_model(&[0], &[0]);
        assert!(matches!(
            build_decision_matrix(&model, &segs, &e, 0.75, &[0.0; 4]),
            Err(MetricsError::ZeroWeightSum)
        ));
        assert!(build_decision_matrix(&model, &segs, &e, 0.75, &[0.5; 3]).is_err());
        let other = single_model(&[9], &[0]);
        assert!(matches!(
            build_decision_matrix(&other, &segs, &e, 0.75, &[0.25; 4]),
            Err(MetricsError::Unassigned(0))
        ));
    }
}
