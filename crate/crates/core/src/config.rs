//! Pipeline configuration, stored as TOML.
//!
//! ```toml
//! [telemetry]
//! path = "telemetry.csv"          # relative paths resolve against this file
//! delimiter = ","
//! require_present = ["melt_temperature_C"]
//! drop = ["voltage_V"]
//! [telemetry.schema]              # canonical field -> source column; empty = identity
//! melt_temperature_C = "TT101"
//!
//! [segmentation]
//! min_endpoint_temp_c = 1400.0
//! min_drop_c = 200.0
//! min_segment_samples = 10
//! min_segment_duration_s = 600.0
//!
//! [cluster]
//! profile_length = 128
//! metric = "dtw"                  # or "euclidean"
//! band = 16                       # optional Sakoe-Chiba half-width
//! k = 3                           # optional; otherwise the sweep suggestion
//! k_range = [2, 8]
//! seed = 0
//! n_init = 10
//! max_iter = 100
//! tol = 1e-4
//! z_normalize = false
//!
//! [mcdm]
//! weights = [0.25, 0.25, 0.25, 0.25]
//! vikor_v = 0.5
//! tax_dkk_per_kg = 0.75
//! matrix = "table1_matrix.csv"    # optional: rank this matrix instead
//!
//! [series]
//! prices = "prices.csv"           # or flat_price = 0.8
//! emissions = "emissions.csv"     # or flat_emission = 0.12
//!
//! [output]
//! dir = "out"
//! plots = false
//! ```

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cluster::{KMeansParams, Metric};
use crate::ingest::{is_canonical, MELT_TEMPERATURE};
use crate::metrics::CRITERIA;
use crate::segment::SegmentationParams;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("cannot parse config: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("cannot serialize config: {0}")]
    Serialize(#[from] toml::ser::Error),
    #[error("invalid config: {0}")]
    Invalid(String),
}

fn invalid(msg: impl Into<String>) -> ConfigError {
    ConfigError::Invalid(msg.into())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TelemetryConfig {
    pub path: Option<PathBuf>,
    pub delimiter: char,
    pub schema: BTreeMap<String, String>,
    /// Fields that must be mapped in the schema.
    pub required: Vec<String>,
    /// Rows missing any of these are removed.
    pub require_present: Vec<String>,
    /// Columns removed before segmentation.
    pub drop: Vec<String>,
}

impl Default for TelemetryConfig {
    fn default() -> Self {
        Self {
            path: None,
            delimiter: ',',
            schema: BTreeMap::new(),
            required: Vec::new(),
            require_present: vec![MELT_TEMPERATURE.to_string()],
            drop: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MetricKind {
    Euclidean,
    Dtw,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ClusterConfig {
    pub profile_length: usize,
    pub metric: MetricKind,
    pub band: Option<usize>,
    pub k: Option<usize>,
    pub k_range: [usize; 2],
    pub seed: u64,
    pub n_init: usize,
    pub max_iter: usize,
    pub tol: f64,
    pub z_normalize: bool,
}

impl Default for ClusterConfig {
    fn default() -> Self {
        Self {
            profile_length: 128,
            metric: MetricKind::Dtw,
            band: None,
            k: None,
            k_range: [2, 8],
            seed: 0,
            n_init: 10,
            max_iter: 100,
            tol: 1e-4,
            z_normalize: false,
        }
    }
}

impl ClusterConfig {
    pub fn metric(&self) -> Metric {
        match self.metric {
            MetricKind::Euclidean => Metric::Euclidean,
            MetricKind::Dtw => Metric::Dtw { band: self.band },
        }
    }

    /// Parameters for `k` clusters.
    pub fn params(&self, k: usize) -> KMeansParams {
        KMeansParams::new(k, self.metric())
            .with_seed(self.seed)
            .with_n_init(self.n_init)
            .with_max_iter(self.max_iter)
            .with_tol(self.tol)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct McdmConfig {
    pub weights: Vec<f64>,
    pub vikor_v: f64,
    pub tax_dkk_per_kg: f64,
    pub matrix: Option<PathBuf>,
}

impl Default for McdmConfig {
    fn default() -> Self {
        Self {
            weights: vec![1.0 / CRITERIA.len() as f64; CRITERIA.len()],
            vikor_v: 0.5,
            tax_dkk_per_kg: 0.75,
            matrix: None,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SeriesConfig {
    pub prices: Option<PathBuf>,
    pub emissions: Option<PathBuf>,
    pub flat_price: Option<f64>,
    pub flat_emission: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    pub dir: PathBuf,
    pub plots: bool,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            dir: PathBuf::from("out"),
            plots: false,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PipelineConfig {
    pub telemetry: TelemetryConfig,
    pub segmentation: SegmentationParams,
    pub cluster: ClusterConfig,
    pub mcdm: McdmConfig,
    pub series: SeriesConfig,
    pub output: OutputConfig,
}

impl PipelineConfig {
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        Ok(toml::from_str(text)?)
    }

    pub fn to_toml(&self) -> Result<String, ConfigError> {
        Ok(toml::to_string(self)?)
    }

    /// Reads, resolves relative paths against the file's directory, and
    /// validates.
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let mut config = Self::from_toml(&text)?;
        let base = path.parent().unwrap_or(Path::new(""));
        config.resolve_paths(base);
        config.validate()?;
        Ok(config)
    }

    pub fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        for p in [
            self.telemetry.path.as_mut(),
            self.mcdm.matrix.as_mut(),
            self.series.prices.as_mut(),
            self.series.emissions.as_mut(),
        ]
        .into_iter()
        .flatten()
        {
            fix(p);
        }
        fix(&mut self.output.dir);
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let t = &self.telemetry;
        if !t.delimiter.is_ascii() {
            return Err(invalid("telemetry.delimiter must be a single ASCII character"));
        }
        for name in t.schema.keys().chain(&t.required).chain(&t.require_present).chain(&t.drop) {
            if !is_canonical(name) {
                return Err(invalid(format!("unknown telemetry field `{name}`")));
            }
        }
        self.segmentation
            .validate()
            .map_err(|e| invalid(format!("segmentation: {e}")))?;

        let c = &self.cluster;
        if c.profile_length < 2 {
            return Err(invalid("cluster.profile_length must be >= 2"));
        }
        let [lo, hi] = c.k_range;
        if lo < 2 || hi < lo {
            return Err(invalid(format!("cluster.k_range [{lo}, {hi}] must satisfy 2 <= lo <= hi")));
        }
        if c.k == Some(0) {
            return Err(invalid("cluster.k must be positive"));
        }
        if c.band.is_some() && c.metric == MetricKind::Euclidean {
            return Err(invalid("cluster.band only applies to the dtw metric"));
        }
        c.params(c.k.unwrap_or(lo))
            .validate()
            .map_err(|e| invalid(format!("cluster: {e}")))?;

        let m = &self.mcdm;
        if m.weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(invalid("mcdm.weights must be finite and >= 0"));
        }
        let sum: f64 = m.weights.iter().sum();
        if (sum - 1.0).abs() > 1e-6 {
            return Err(invalid(format!("mcdm.weights must sum to 1, got {sum}")));
        }
        if m.matrix.is_none() && m.weights.len() != CRITERIA.len() {
            return Err(invalid(format!("mcdm.weights needs {} entries", CRITERIA.len())));
        }
        if !(0.0..=1.0).contains(&m.vikor_v) {
            return Err(invalid("mcdm.vikor_v must lie in [0, 1]"));
        }
        if !(m.tax_dkk_per_kg >= 0.0 && m.tax_dkk_per_kg.is_finite()) {
            return Err(invalid("mcdm.tax_dkk_per_kg must be >= 0"));
        }

        let s = &self.series;
        if s.prices.is_some() && s.flat_price.is_some() {
            return Err(invalid("series: give either prices or flat_price"));
        }
        if s.emissions.is_some() && s.flat_emission.is_some() {
            return Err(invalid("series: give either emissions or flat_emission"));
        }
        if s.flat_emission.is_some_and(|e| e.is_nan() || e < 0.0) {
            return Err(invalid("series.flat_emission must be >= 0"));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate() {
        PipelineConfig::default().validate().unwrap();
    }

    #[test]
    fn toml_round_trip() {
        let mut config = PipelineConfig::default();
        config.telemetry.path = Some("data/t.csv".into());
        config.telemetry.schema.insert(MELT_TEMPERATURE.into(), "TT101".into());
        config.telemetry.drop = vec!["voltage_V".into()];
        config.cluster.band = Some(12);
        config.cluster.k = Some(3);
        config.mcdm.weights = vec![0.4, 0.2, 0.2, 0.2];
        config.series.flat_price = Some(0.8);
        config.series.emissions = Some("em.csv".into());
        config.output.plots = true;
        let text = config.to_toml().unwrap();
        assert_eq!(PipelineConfig::from_toml(&text).unwrap(), config);
    }

    #[test]
    fn partial_file_uses_defaults() {
        let config = PipelineConfig::from_toml("[cluster]\nk = 4\nmetric = \"euclidean\"\n").unwrap();
        assert_eq!(config.cluster.k, Some(4));
        assert_eq!(config.cluster.metric(), Metric::Euclidean);
        assert_eq!(config.segmentation, SegmentationParams::default());
        assert_eq!(config.mcdm.tax_dkk_per_kg, 0.75);
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(PipelineConfig::from_toml("[cluster]\nkk = 4\n").is_err());
        assert!(PipelineConfig::from_toml("[clusters]\n").is_err());
    }

    #[test]
    fn validation_errors() {
        let check = |edit: fn(&mut PipelineConfig)| {
            let mut c = PipelineConfig::default();
            edit(&mut c);
            assert!(matches!(c.validate(), Err(ConfigError::Invalid(_))));
        };
        check(|c| c.mcdm.weights = vec![0.5, 0.5, 0.5, 0.5]);
        check(|c| c.mcdm.weights = vec![0.5, 0.5]);
        check(|c| c.cluster.k_range = [1, 4]);
        check(|c| c.cluster.k_range = [5, 4]);
        check(|c| c.cluster.profile_length = 1);
        check(|c| c.mcdm.vikor_v = 2.0);
        check(|c| c.segmentation.min_drop_c = 0.0);
        check(|c| {
            c.cluster.metric = MetricKind::Euclidean;
            c.cluster.band = Some(3);
        });
        check(|c| {
            c.series.flat_price = Some(1.0);
            c.series.prices = Some("p.csv".into());
        });
        check(|c| {
            c.telemetry.schema.insert("bogus".into(), "x".into());
        });
    }

    #[test]
    fn paths_resolve_against_config_dir() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.toml");
        std::fs::write(
            &path,
            "[telemetry]\npath = \"t.csv\"\n[series]\nprices = \"/abs/p.csv\"\n[output]\ndir = \"o\"\n",
        )
        .unwrap();
        let config = PipelineConfig::load(&path).unwrap();
        assert_eq!(config.telemetry.path, Some(dir.path().join("t.csv")));
        assert_eq!(config.series.prices, Some(PathBuf::from("/abs/p.csv")));
        assert_eq!(config.output.dir, dir.path().join("o"));
    }
}
