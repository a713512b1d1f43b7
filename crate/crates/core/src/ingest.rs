//! Telemetry ingestion: schema mapping, CSV loading, completeness reporting
//! and row/column cleaning.
//!
//! A [`TelemetryFrame`] is column-oriented internally. Every row carries a
//! UTC timestamp; all other fields are optional reals keyed by their
//! canonical name (see the constants below).

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use chrono::{DateTime, NaiveDateTime, SecondsFormat, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const TIMESTAMP: &str = "timestamp";
pub const MELT_TEMPERATURE: &str = "melt_temperature_C";
pub const MELT_WEIGHT: &str = "melt_weight_tonne";
pub const POWER: &str = "power_kW";
pub const ENERGY_COUNTER: &str = "energy_counter_kWh";
pub const VOLTAGE: &str = "voltage_V";
pub const CURRENT: &str = "current_A";
pub const FREQUENCY: &str = "frequency_Hz";
pub const FURNACE_STATE: &str = "furnace_state";
/// Prefix of the indexed cooling-water temperature fields, e.g. `cooling_water_temp_C[0]`.
pub const COOLING_WATER_TEMP: &str = "cooling_water_temp_C";
/// Prefix of the indexed cooling-water flow fields, e.g. `cooling_water_flow[2]`.
pub const COOLING_WATER_FLOW: &str = "cooling_water_flow";

const SCALAR_FIELDS: [&str; 9] = [
    MELT_TEMPERATURE,
    MELT_WEIGHT,
    POWER,
    ENERGY_COUNTER,
    VOLTAGE,
    CURRENT,
    FREQUENCY,
    FURNACE_STATE,
    TIMESTAMP,
];

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("missing column `{column}` for required field `{field}`")]
    MissingColumn { field: String, column: String },
    #[error("file contains no data rows")]
    EmptyFile,
    #[error("frame has no rows")]
    EmptyFrame,
    #[error("duplicate timestamp {timestamp} with conflicting values")]
    NonMonotonicTime { timestamp: String },
    #[error("row {row}: unparseable timestamp `{value}`")]
    InvalidTimestamp { row: usize, value: String },
    #[error("unknown canonical field `{0}`")]
    UnknownField(String),
    #[error("source column `{column}` is mapped by both `{first}` and `{second}`")]
    DuplicateSource {
        column: String,
        first: String,
        second: String,
    },
    #[error("required field `{0}` has no column mapping")]
    UnmappedRequired(String),
    #[error("column `{field}` has {got} values but the frame has {expected} rows")]
    ColumnLength {
        field: String,
        got: usize,
        expected: usize,
    },
    #[error("timestamps are not strictly increasing at row {0}")]
    UnsortedRows(usize),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Returns true for names in the canonical telemetry vocabulary.
pub fn is_canonical(name: &str) -> bool {
    if SCALAR_FIELDS.contains(&name) {
        return true;
    }
    [COOLING_WATER_TEMP, COOLING_WATER_FLOW].iter().any(|prefix| {
        name.strip_prefix(prefix)
            .and_then(|rest| rest.strip_prefix('['))
            .and_then(|rest| rest.strip_suffix(']'))
            .is_some_and(|idx| !idx.is_empty() && idx.bytes().all(|b| b.is_ascii_digit()))
    })
}

/// Mapping from canonical field names to the column names of a source file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TelemetrySchema {
    column_map: BTreeMap<String, String>,
    required: BTreeSet<String>,
}

impl TelemetrySchema {
    /// Builds a schema. `timestamp` and `melt_temperature_C` are always added
    /// to the required set.
    pub fn new(
        column_map: BTreeMap<String, String>,
        required: impl IntoIterator<Item = String>,
    ) -> Result<Self, IngestError> {
        let mut by_source: BTreeMap<&str, &str> = BTreeMap::new();
        for (canonical, source) in &column_map {
            if !is_canonical(canonical) {
                return Err(IngestError::UnknownField(canonical.clone()));
            }
            if let Some(first) = by_source.insert(source, canonical) {
                return Err(IngestError::DuplicateSource {
                    column: source.clone(),
                    first: first.to_string(),
                    second: canonical.clone(),
                });
            }
        }
        let mut required: BTreeSet<String> = required.into_iter().collect();
        required.insert(TIMESTAMP.to_string());
        required.insert(MELT_TEMPERATURE.to_string());
        for name in &required {
            if !is_canonical(name) {
                return Err(IngestError::UnknownField(name.clone()));
            }
            if !column_map.contains_key(name) {
                return Err(IngestError::UnmappedRequired(name.clone()));
            }
        }
        Ok(Self {
            column_map,
            required,
        })
    }

    /// Schema whose source columns carry the canonical names themselves.
    pub fn identity<'a>(fields: impl IntoIterator<Item = &'a str>) -> Result<Self, IngestError> {
        let mut map: BTreeMap<String, String> = fields
            .into_iter()
            .map(|f| (f.to_string(), f.to_string()))
            .collect();
        map.insert(TIMESTAMP.to_string(), TIMESTAMP.to_string());
        Self::new(map, [])
    }

    pub fn column_map(&self) -> &BTreeMap<String, String> {
        &self.column_map
    }

    pub fn required(&self) -> &BTreeSet<String> {
        &self.required
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct FrameMetadata {
    pub source: Option<PathBuf>,
    /// Numeric cells that failed to parse and were turned into missing values.
    pub unparseable_cells: usize,
    /// Rows dropped because an identical row with the same timestamp existed.
    pub duplicate_rows_removed: usize,
}

/// Timestamped multivariate furnace telemetry. Immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub struct TelemetryFrame {
    timestamps: Vec<DateTime<Utc>>,
    columns: BTreeMap<String, Vec<Option<f64>>>,
    metadata: FrameMetadata,
}

impl TelemetryFrame {
    pub fn new(
        timestamps: Vec<DateTime<Utc>>,
        columns: BTreeMap<String, Vec<Option<f64>>>,
    ) -> Result<Self, IngestError> {
        if let Some(i) = timestamps.windows(2).position(|w| w[1] <= w[0]) {
            return Err(IngestError::UnsortedRows(i + 1));
        }
        for (field, values) in &columns {
            if !is_canonical(field) || field == TIMESTAMP {
                return Err(IngestError::UnknownField(field.clone()));
            }
            if values.len() != timestamps.len() {
                return Err(IngestError::ColumnLength {
                    field: field.clone(),
                    got: values.len(),
                    expected: timestamps.len(),
                });
            }
        }
        Ok(Self {
            timestamps,
            columns,
            metadata: FrameMetadata::default(),
        })
    }

    pub fn with_metadata(mut self, metadata: FrameMetadata) -> Self {
        self.metadata = metadata;
        self
    }

    pub fn len(&self) -> usize {
        self.timestamps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.timestamps.is_empty()
    }

    pub fn timestamps(&self) -> &[DateTime<Utc>] {
        &self.timestamps
    }

    pub fn column(&self, field: &str) -> Option<&[Option<f64>]> {
        self.columns.get(field).map(Vec::as_slice)
    }

    /// Canonical value fields present in the frame, in sorted order.
    pub fn fields(&self) -> impl Iterator<Item = &str> {
        self.columns.keys().map(String::as_str)
    }

    pub fn metadata(&self) -> &FrameMetadata {
        &self.metadata
    }

    /// Time between the first and last row.
    pub fn span(&self) -> Option<chrono::Duration> {
        Some(*self.timestamps.last()? - *self.timestamps.first()?)
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<(), IngestError> {
        let mut out = csv::Writer::from_writer(writer);
        let mut header = vec![TIMESTAMP.to_string()];
        header.extend(self.columns.keys().cloned());
        out.write_record(&header)?;
        for (row, ts) in self.timestamps.iter().enumerate() {
            let mut record = vec![format_timestamp(ts)];
            for values in self.columns.values() {
                record.push(values[row].map(|v| v.to_string()).unwrap_or_default());
            }
            out.write_record(&record)?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn save_csv(&self, path: &Path) -> Result<(), IngestError> {
        let file = std::fs::File::create(path)?;
        self.write_csv(std::io::BufWriter::new(file))
    }
}

/// Formats a timestamp as RFC 3339 in UTC with a `Z` suffix.
pub fn format_timestamp(ts: &DateTime<Utc>) -> String {
    ts.to_rfc3339_opts(SecondsFormat::AutoSi, true)
}

/// Parses an ISO-8601 timestamp. Inputs without an offset are taken as UTC.
pub fn parse_timestamp(text: &str) -> Option<DateTime<Utc>> {
    let text = text.trim();
    if let Ok(dt) = DateTime::parse_from_rfc3339(text) {
        return Some(dt.with_timezone(&Utc));
    }
    for fmt in [
        "%Y-%m-%d %H:%M:%S%.f%:z",
        "%Y-%m-%dT%H:%M:%S%.f%z",
        "%Y-%m-%d %H:%M:%S%.f%z",
    ] {
        if let Ok(dt) = DateTime::parse_from_str(text, fmt) {
            return Some(dt.with_timezone(&Utc));
        }
    }
    for fmt in [
        "%Y-%m-%dT%H:%M:%S%.f",
        "%Y-%m-%d %H:%M:%S%.f",
        "%Y-%m-%dT%H:%M",
        "%Y-%m-%d %H:%M",
    ] {
        if let Ok(dt) = NaiveDateTime::parse_from_str(text, fmt) {
            return Some(dt.and_utc());
        }
    }
    None
}

enum Cell {
    Missing,
    Value(f64),
    Garbage,
}

fn parse_cell(text: &str) -> Cell {
    let text = text.trim();
    if text.is_empty()
        || text.eq_ignore_ascii_case("nan")
        || text.eq_ignore_ascii_case("null")
    {
        return Cell::Missing;
    }
    match text.parse::<f64>() {
        Ok(v) if v.is_finite() => Cell::Value(v),
        _ => Cell::Garbage,
    }
}

/// Loads a comma-delimited telemetry file.
pub fn load_telemetry(path: &Path, schema: &TelemetrySchema) -> Result<TelemetryFrame, IngestError> {
    load_telemetry_with_delimiter(path, schema, b',')
}

pub fn load_telemetry_with_delimiter(
    path: &Path,
    schema: &TelemetrySchema,
    delimiter: u8,
) -> Result<TelemetryFrame, IngestError> {
    let file = std::fs::File::open(path)?;
    let frame = read_telemetry(file, schema, delimiter)?;
    let metadata = FrameMetadata {
        source: Some(path.to_path_buf()),
        ..frame.metadata.clone()
    };
    Ok(frame.with_metadata(metadata))
}

/// Reads telemetry CSV from any reader. Rows are sorted by timestamp; exact
/// duplicate rows are collapsed and conflicting duplicates rejected.
pub fn read_telemetry<R: Read>(
    reader: R,
    schema: &TelemetrySchema,
    delimiter: u8,
) -> Result<TelemetryFrame, IngestError> {
    let mut csv_reader = csv::ReaderBuilder::new()
        .delimiter(delimiter)
        .has_headers(true)
        .flexible(false)
        .from_reader(reader);
    let headers = csv_reader.headers()?.clone();
    let position = |column: &str| headers.iter().position(|h| h.trim() == column);

    let ts_column = &schema.column_map[TIMESTAMP];
    let ts_index = position(ts_column).ok_or_else(|| IngestError::MissingColumn {
        field: TIMESTAMP.to_string(),
        column: ts_column.clone(),
    })?;

    let mut fields: Vec<(String, usize)> = Vec::new();
    for (canonical, source) in &schema.column_map {
        if canonical == TIMESTAMP {
            continue;
        }
        match position(source) {
            Some(idx) => fields.push((canonical.clone(), idx)),
            None if schema.required.contains(canonical) => {
                return Err(IngestError::MissingColumn {
                    field: canonical.clone(),
                    column: source.clone(),
                })
            }
            None => log::debug!("optional column `{source}` ({canonical}) not present"),
        }
    }

    let mut rows: Vec<(DateTime<Utc>, Vec<Option<f64>>)> = Vec::new();
    let mut unparseable = 0usize;
    for (row, record) in csv_reader.records().enumerate() {
        let record = record?;
        let raw_ts = record.get(ts_index).unwrap_or_default();
        let ts = parse_timestamp(raw_ts).ok_or_else(|| IngestError::InvalidTimestamp {
            row,
            value: raw_ts.to_string(),
        })?;
        let values = fields
            .iter()
            .map(|(_, idx)| match parse_cell(record.get(*idx).unwrap_or_default()) {
                Cell::Missing => None,
                Cell::Value(v) => Some(v),
                Cell::Garbage => {
                    unparseable += 1;
                    None
                }
            })
            .collect();
        rows.push((ts, values));
    }
    if rows.is_empty() {
        return Err(IngestError::EmptyFile);
    }

    rows.sort_by_key(|(ts, _)| *ts);
    let mut deduped: Vec<(DateTime<Utc>, Vec<Option<f64>>)> = Vec::with_capacity(rows.len());
    let mut duplicates = 0usize;
    for (ts, values) in rows {
        if let Some((last_ts, last_values)) = deduped.last() {
            if *last_ts == ts {
                if *last_values != values {
                    return Err(IngestError::NonMonotonicTime {
                        timestamp: format_timestamp(&ts),
                    });
                }
                duplicates += 1;
                continue;
            }
        }
        deduped.push((ts, values));
    }

    let mut columns: BTreeMap<String, Vec<Option<f64>>> = fields
        .iter()
        .map(|(name, _)| (name.clone(), Vec::with_capacity(deduped.len())))
        .collect();
    let mut timestamps = Vec::with_capacity(deduped.len());
    for (ts, values) in deduped {
        timestamps.push(ts);
        for ((name, _), value) in fields.iter().zip(values) {
            columns.get_mut(name).expect("column exists").push(value);
        }
    }
    Ok(TelemetryFrame::new(timestamps, columns)?.with_metadata(FrameMetadata {
        source: None,
        unparseable_cells: unparseable,
        duplicate_rows_removed: duplicates,
    }))
}

/// Fraction of rows carrying a value, per field.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompletenessReport {
    pub per_field: BTreeMap<String, f64>,
    pub total_rows: usize,
}

pub const COMPLETENESS_FORMAT: &str = "meltline.completeness.v1";

impl CompletenessReport {
    /// JSON with fractions fixed at six decimal places.
    pub fn to_json(&self) -> String {
        let mut out = String::new();
        out.push_str("{\n");
        let _ = writeln!(out, "  \"format\": \"{COMPLETENESS_FORMAT}\",");
        let _ = writeln!(out, "  \"total_rows\": {},", self.total_rows);
        out.push_str("  \"per_field\": {");
        for (i, (field, fraction)) in self.per_field.iter().enumerate() {
            if i > 0 {
                out.push(',');
            }
            let key = serde_json::to_string(field).expect("string serializes");
            let _ = write!(out, "\n    {key}: {fraction:.6}");
        }
        if !self.per_field.is_empty() {
            out.push_str("\n  ");
        }
        out.push_str("}\n}\n");
        out
    }

    pub fn to_table(&self) -> String {
        let width = self
            .per_field
            .keys()
            .map(String::len)
            .max()
            .unwrap_or(5)
            .max(5);
        let mut out = format!("{:<width$}  completeness\n", "field");
        for (field, fraction) in &self.per_field {
            let _ = writeln!(out, "{field:<width$}  {:>10.2} %", fraction * 100.0);
        }
        let _ = writeln!(out, "rows: {}", self.total_rows);
        out
    }
}

pub fn completeness_report(frame: &TelemetryFrame) -> Result<CompletenessReport, IngestError> {
    if frame.is_empty() {
        return Err(IngestError::EmptyFrame);
    }
    let total = frame.len();
    let per_field = frame
        .columns
        .iter()
        .map(|(field, values)| {
            let present = values.iter().filter(|v| v.is_some()).count();
            (field.clone(), present as f64 / total as f64)
        })
        .collect();
    Ok(CompletenessReport {
        per_field,
        total_rows: total,
    })
}

/// Drops whole columns and removes rows missing any of `require_present`.
/// Presence is evaluated on the input frame, before columns are dropped; a
/// required field absent from the frame removes every row.
pub fn clean_telemetry(
    frame: &TelemetryFrame,
    drop_fields: &BTreeSet<String>,
    require_present: &BTreeSet<String>,
) -> TelemetryFrame {
    let keep: Vec<usize> = (0..frame.len())
        .filter(|&row| {
            require_present.iter().all(|field| {
                field == TIMESTAMP
                    || frame
                        .columns
                        .get(field)
                        .is_some_and(|values| values[row].is_some())
            })
        })
        .collect();
    let timestamps = keep.iter().map(|&r| frame.timestamps[r]).collect();
    let columns = frame
        .columns
        .iter()
        .filter(|(field, _)| !drop_fields.contains(*field))
        .map(|(field, values)| (field.clone(), keep.iter().map(|&r| values[r]).collect()))
        .collect();
    TelemetryFrame {
        timestamps,
        columns,
        metadata: frame.metadata.clone(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn schema(pairs: &[(&str, &str)]) -> TelemetrySchema {
        let map = pairs
            .iter()
            .map(|(c, s)| (c.to_string(), s.to_string()))
            .collect();
        TelemetrySchema::new(map, []).unwrap()
    }

    fn ts_temp_schema() -> TelemetrySchema {
        schema(&[(TIMESTAMP, "ts"), (MELT_TEMPERATURE, "temp")])
    }

    #[test]
    fn three_row_identity_load() {
        let csv = "ts,temp\n2022-05-11T00:00:00Z,600\n2022-05-11T00:00:10Z,610\n2022-05-11T00:00:20Z,620\n";
        let frame = read_telemetry(csv.as_bytes(), &ts_temp_schema(), b',').unwrap();
        assert_eq!(frame.len(), 3);
        let report = completeness_report(&frame).unwrap();
        assert_eq!(report.per_field[MELT_TEMPERATURE], 1.0);
        assert_eq!(report.total_rows, 3);
    }

    #[test]
    fn nan_literal_becomes_missing() {
        let csv = "ts,temp\n2022-05-11T00:00:00Z,600\n2022-05-11T00:00:10Z,NaN\n2022-05-11T00:00:20Z,620\n";
        let frame = read_telemetry(csv.as_bytes(), &ts_temp_schema(), b',').unwrap();
        assert_eq!(frame.column(MELT_TEMPERATURE).unwrap()[1], None);
        let report = completeness_report(&frame).unwrap();
        assert!((report.per_field[MELT_TEMPERATURE] - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(frame.metadata().unparseable_cells, 0);
    }

    #[test]
    fn missing_encodings_and_garbage() {
        let csv = "ts,temp\n\
            2022-05-11 00:00:00,\n\
            2022-05-11 00:00:01,null\n\
            2022-05-11 00:00:02,NULL\n\
            2022-05-11 00:00:03,nan\n\
            2022-05-11 00:00:04,12x\n\
            2022-05-11 00:00:05,inf\n\
            2022-05-11 00:00:06,1.5\n";
        let frame = read_telemetry(csv.as_bytes(), &ts_temp_schema(), b',').unwrap();
        let temps = frame.column(MELT_TEMPERATURE).unwrap();
        assert_eq!(&temps[..6], &[None; 6]);
        assert_eq!(temps[6], Some(1.5));
        assert_eq!(frame.metadata().unparseable_cells, 2);
    }

    #[test]
    fn four_rows_one_missing_is_three_quarters() {
        let csv = "ts,temp\n2022-05-11T00:00:00Z,1\n2022-05-11T00:00:01Z,\n2022-05-11T00:00:02Z,3\n2022-05-11T00:00:03Z,4\n";
        let frame = read_telemetry(csv.as_bytes(), &ts_temp_schema(), b',').unwrap();
        assert_eq!(completeness_report(&frame).unwrap().per_field[MELT_TEMPERATURE], 0.75);
    }

    #[test]
    fn missing_required_column() {
        let csv = "ts,other\n2022-05-11T00:00:00Z,1\n";
        let err = read_telemetry(csv.as_bytes(), &ts_temp_schema(), b',').unwrap_err();
        assert!(matches!(err, IngestError::MissingColumn { ref column, .. } if column == "temp"));
    }

    #[test]
    fn optional_column_may_be_absent() {
        let s = schema(&[(TIMESTAMP, "ts"), (MELT_TEMPERATURE, "temp"), (VOLTAGE, "u")]);
        let csv = "ts,temp\n2022-05-11T00:00:00Z,1\n";
        let frame = read_telemetry(csv.as_bytes(), &s, b',').unwrap();
        assert!(frame.column(VOLTAGE).is_none());
    }

    #[test]
    fn header_only_is_empty_file() {
        let err = read_telemetry("ts,temp\n".as_bytes(), &ts_temp_schema(), b',').unwrap_err();
        assert!(matches!(err, IngestError::EmptyFile));
    }

    #[test]
    fn rows_are_sorted_and_duplicates_collapsed() {
        let csv = "ts,temp\n2022-05-11T00:00:20Z,3\n2022-05-11T00:00:00Z,1\n2022-05-11T00:00:10Z,2\n2022-05-11T00:00:10Z,2\n";
        let frame = read_telemetry(csv.as_bytes(), &ts_temp_schema(), b',').unwrap();
        assert_eq!(frame.len(), 3);
        let temps: Vec<_> = frame.column(MELT_TEMPERATURE).unwrap().to_vec();
        assert_eq!(temps, vec![Some(1.0), Some(2.0), Some(3.0)]);
        assert_eq!(frame.metadata().duplicate_rows_removed, 1);
    }

    #[test]
    fn conflicting_duplicates_rejected() {
        let csv = "ts,temp\n2022-05-11T00:00:10Z,2\n2022-05-11T00:00:10Z,5\n";
        let err = read_telemetry(csv.as_bytes(), &ts_temp_schema(), b',').unwrap_err();
        assert!(matches!(err, IngestError::NonMonotonicTime { .. }));
    }

    #[test]
    fn semicolon_delimiter_and_offsets() {
        let csv = "ts;temp\n2022-05-11T02:00:00+02:00;1\n2022-05-11 00:00:10;2\n";
        let frame = read_telemetry(csv.as_bytes(), &ts_temp_schema(), b';').unwrap();
        assert_eq!(format_timestamp(&frame.timestamps()[0]), "2022-05-11T00:00:00Z");
        assert_eq!(format_timestamp(&frame.timestamps()[1]), "2022-05-11T00:00:10Z");
    }

    #[test]
    fn schema_invariants() {
        let map: BTreeMap<String, String> = [
            (TIMESTAMP.to_string(), "t".to_string()),
            (MELT_TEMPERATURE.to_string(), "x".to_string()),
            (POWER.to_string(), "x".to_string()),
        ]
        .into();
        assert!(matches!(
            TelemetrySchema::new(map, []),
            Err(IngestError::DuplicateSource { .. })
        ));
        let map: BTreeMap<String, String> = [(TIMESTAMP.to_string(), "t".to_string())].into();
        assert!(matches!(
            TelemetrySchema::new(map, []),
            Err(IngestError::UnmappedRequired(_))
        ));
        let s = ts_temp_schema();
        assert!(s.required().contains(TIMESTAMP) && s.required().contains(MELT_TEMPERATURE));
        assert!(is_canonical("cooling_water_temp_C[3]"));
        assert!(!is_canonical("cooling_water_temp_C[]"));
        assert!(!is_canonical("bogus"));
    }

    #[test]
    fn clean_drops_state_and_missing_temperature() {
        let csv = "ts,temp,state\n\
            2022-05-11T00:00:00Z,600,1\n\
            2022-05-11T00:00:10Z,,1\n\
            2022-05-11T00:00:20Z,700,2\n";
        let s = schema(&[(TIMESTAMP, "ts"), (MELT_TEMPERATURE, "temp"), (FURNACE_STATE, "state")]);
        let frame = read_telemetry(csv.as_bytes(), &s, b',').unwrap();
        let cleaned = clean_telemetry(
            &frame,
            &[FURNACE_STATE.to_string()].into(),
            &[MELT_TEMPERATURE.to_string()].into(),
        );
        assert!(cleaned.column(FURNACE_STATE).is_none());
        assert_eq!(cleaned.len(), 2);
        assert!(cleaned.column(MELT_TEMPERATURE).unwrap().iter().all(Option::is_some));
    }

    #[test]
    fn clean_without_missing_is_identity_on_rows() {
        let csv = "ts,temp\n2022-05-11T00:00:00Z,1\n2022-05-11T00:00:01Z,2\n";
        let frame = read_telemetry(csv.as_bytes(), &ts_temp_schema(), b',').unwrap();
        let cleaned = clean_telemetry(&frame, &BTreeSet::new(), &[MELT_TEMPERATURE.to_string()].into());
        assert_eq!(cleaned, frame);
    }

    #[test]
    fn clean_counts_hundred_rows() {
        let start = parse_timestamp("2022-05-11T00:00:00Z").unwrap();
        let timestamps: Vec<_> = (0..100).map(|i| start + chrono::Duration::seconds(i)).collect();
        // every row index divisible by 8 is missing: 0, 8, ..., 96 -> 13 rows
        let temps: Vec<Option<f64>> = (0..100).map(|i| (i % 8 != 0).then_some(i as f64)).collect();
        let missing = temps.iter().filter(|t| t.is_none()).count();
        assert_eq!(missing, 13);
        let frame = TelemetryFrame::new(timestamps, [(MELT_TEMPERATURE.to_string(), temps)].into()).unwrap();
        let cleaned = clean_telemetry(&frame, &BTreeSet::new(), &[MELT_TEMPERATURE.to_string()].into());
        assert_eq!(cleaned.len(), 87);
    }

    #[test]
    fn completeness_json_has_six_decimals() {
        let report = CompletenessReport {
            per_field: [("voltage_V".to_string(), 0.93)].into(),
            total_rows: 100,
        };
        let json = report.to_json();
        assert!(json.contains("\"voltage_V\": 0.930000"), "{json}");
        let parsed: serde_json::Value = serde_json::from_str(&json).unwrap();
        assert_eq!(parsed["total_rows"], 100);
    }

    #[test]
    fn empty_frame_report_errors() {
        let frame = TelemetryFrame::new(vec![], BTreeMap::new()).unwrap();
        assert!(matches!(completeness_report(&frame), Err(IngestError::EmptyFrame)));
    }

    #[test]
    fn frame_rejects_unsorted_timestamps() {
        let t = parse_timestamp("2022-05-11T00:00:00Z").unwrap();
        assert!(matches!(
            TelemetryFrame::new(vec![t, t], BTreeMap::new()),
            Err(IngestError::UnsortedRows(1))
        ));
    }
}
