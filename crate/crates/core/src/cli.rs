//! Command-line front end.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use crate::config::{ConfigError, MetricKind, PipelineConfig};
use crate::pipeline::{run_stages, Stage, StageError};
use crate::synth::{generate, SynthConfig};

#[derive(Debug, Parser)]
#[command(name = "meltline", version, about = "Best-practice melting pattern analysis for induction furnaces")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args, Clone)]
pub struct RunArgs {
    /// Pipeline configuration (TOML).
    #[arg(long)]
    pub config: PathBuf,
    /// Output directory; overrides `output.dir`.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Clustering seed; overrides `cluster.seed`.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Write SVG plots next to the CSV outputs.
    #[arg(long)]
    pub plots: bool,
}

#[derive(Debug, Args, Clone)]
pub struct SynthArgs {
    /// Directory for the generated telemetry, series and config.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = SynthConfig::default().seed)]
    pub seed: u64,
    #[arg(long, default_value_t = SynthConfig::default().melts_per_template)]
    pub melts_per_template: usize,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Load telemetry, report per-field completeness and write the cleaned frame.
    IngestReport(RunArgs),
    /// Detect melt endpoints and write the segment manifest and traces.
    Segment(RunArgs),
    /// Fit k-means over the configured k range and suggest k.
    SweepK(RunArgs),
    /// Fit the final cluster model.
    Cluster(RunArgs),
    /// Build the per-cluster decision matrix.
    Matrix(RunArgs),
    /// Score the decision matrix with SAW, MEW, TOPSIS, mTOPSIS and VIKOR.
    Rank(RunArgs),
    /// Replay all melts with best-practice performance.
    Savings(RunArgs),
    /// Run every stage in order.
    Pipeline(RunArgs),
    /// Write synthetic telemetry, price and emission series, and a config.
    Synth(SynthArgs),
}

/// Failure with its exit status and a JSON description for stderr.
#[derive(Debug)]
pub struct CliFailure {
    pub exit_code: i32,
    pub json: serde_json::Value,
}

impl CliFailure {
    fn config(err: &ConfigError) -> Self {
        Self {
            exit_code: 2,
            json: json!({ "error": { "kind": "config", "message": err.to_string() } }),
        }
    }

    fn stage(stage: Option<Stage>, err: &StageError) -> Self {
        let mut chain = Vec::new();
        let mut source = std::error::Error::source(err);
        while let Some(s) = source {
            chain.push(s.to_string());
            source = s.source();
        }
        Self {
            exit_code: err.exit_code(),
            json: json!({
                "error": {
                    "kind": err.kind(),
                    "stage": stage.map(Stage::name),
                    "message": err.to_string(),
                    "causes": chain,
                }
            }),
        }
    }
}

fn load_config(args: &RunArgs) -> Result<PipelineConfig, CliFailure> {
    let mut config = PipelineConfig::load(&args.config).map_err(|e| CliFailure::config(&e))?;
    if let Some(out) = &args.out {
        config.output.dir = out.clone();
    }
    if let Some(seed) = args.seed {
        config.cluster.seed = seed;
    }
    config.output.plots |= args.plots;
    Ok(config)
}

pub fn run(cli: Cli) -> Result<(), CliFailure> {
    let (args, stages): (RunArgs, Vec<Stage>) = match cli.command {
        Command::IngestReport(a) => (a, vec![Stage::IngestReport]),
        Command::Segment(a) => (a, vec![Stage::Segment]),
        Command::SweepK(a) => (a, vec![Stage::SweepK]),
        Command::Cluster(a) => (a, vec![Stage::Cluster]),
        Command::Matrix(a) => (a, vec![Stage::Matrix]),
        Command::Rank(a) => (a, vec![Stage::Rank]),
        Command::Savings(a) => (a, vec![Stage::Savings]),
        Command::Pipeline(a) => (a, Stage::ALL.to_vec()),
        Command::Synth(a) => return write_synth(&a).map_err(|e| CliFailure::stage(None, &e)),
    };
    let config = load_config(&args)?;
    run_stages(&config, &stages).map_err(|(stage, e)| CliFailure::stage(Some(stage), &e))
}

pub const SYNTH_TELEMETRY: &str = "telemetry.csv";
pub const SYNTH_PRICES: &str = "prices.csv";
pub const SYNTH_EMISSIONS: &str = "emissions.csv";
pub const SYNTH_TRUTH: &str = "truth.csv";
pub const SYNTH_CONFIG: &str = "meltline.toml";

fn write_synth(args: &SynthArgs) -> Result<(), StageError> {
    let synth = SynthConfig {
        seed: args.seed,
        melts_per_template: args.melts_per_template,
        ..SynthConfig::default()
    };
    write_synthetic_dataset(&args.out, &synth)
}

/// Generates a dataset into `dir` together with a config that runs the
/// whole pipeline on it.
pub fn write_synthetic_dataset(dir: &Path, synth: &SynthConfig) -> Result<(), StageError> {
    fs::create_dir_all(dir)?;
    let data = generate(synth);
    data.frame.save_csv(&dir.join(SYNTH_TELEMETRY))?;
    data.prices.write_csv(&dir.join(SYNTH_PRICES), "price_DKK_per_kWh")?;
    data.emissions.write_csv(&dir.join(SYNTH_EMISSIONS), "co2_kg_per_kWh")?;
    let mut truth = String::from("melt,template,end_index\n");
    for (i, (label, end)) in data.labels.iter().zip(&data.endpoints).enumerate() {
        truth.push_str(&format!("{i},{label},{end}\n"));
    }
    fs::write(dir.join(SYNTH_TRUTH), truth)?;

    let mut config = PipelineConfig::default();
    config.telemetry.path = Some(SYNTH_TELEMETRY.into());
    config.cluster.metric = MetricKind::Dtw;
    config.cluster.seed = synth.seed;
    config.series.prices = Some(SYNTH_PRICES.into());
    config.series.emissions = Some(SYNTH_EMISSIONS.into());
    let text = config
        .to_toml()
        .map_err(|e| StageError::Config(e.to_string()))?;
    fs::write(dir.join(SYNTH_CONFIG), text)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use clap::CommandFactory;

    use super::*;

    #[test]
    fn cli_definition_is_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn overrides_apply() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.toml");
        fs::write(&path, "[cluster]\nseed = 1\n").unwrap();
        let args = RunArgs {
            config: path,
            out: Some("elsewhere".into()),
            seed: Some(9),
            plots: true,
        };
        let config = load_config(&args).unwrap();
        assert_eq!(config.cluster.seed, 9);
        assert_eq!(config.output.dir, PathBuf::from("elsewhere"));
        assert!(config.output.plots);
    }

    #[test]
    fn bad_config_is_exit_two() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.toml");
        fs::write(&path, "[mcdm]\nweights = [1.0, 1.0, 1.0, 1.0]\n").unwrap();
        let err = run(Cli {
            command: Command::Rank(RunArgs {
                config: path,
                out: None,
                seed: None,
                plots: false,
            }),
        })
        .unwrap_err();
        assert_eq!(err.exit_code, 2);
        assert_eq!(err.json["error"]["kind"], "config");
    }
}
