use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use parity_core::metrics::Metric;
use serde::{Deserialize, Serialize};

#[derive(Debug, Parser)]
#[command(name = "parity-audit", version, about = "Classification-parity audits for binary classifiers")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train a model, choose the fairness threshold and check parity at xi.
    /// Exits 0 when parity holds, 2 when it fails.
    Audit(RunArgs),
    /// Candidate thresholds, the performance boundary and the fairness choice.
    Thresholds(RunArgs),
    /// Feature-ablation / oversampling grid.
    Ablate(RunArgs),
    /// AUC and AUC group variance of every algorithm, with and without the
    /// protected feature, before and after oversampling.
    Compare(RunArgs),
    /// Write a synthetic biased dataset and its schema.
    Synth(SynthArgs),
    /// Re-render reports from the JSON documents of an earlier run.
    Report(ReportArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum AlgoChoice {
    Logreg,
    Forest,
    Gbt,
    All,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SampleChoice {
    On,
    Off,
    Both,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeChoice {
    Groups,
    Overall,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
    Md,
    Svg,
}

pub const ALL_FORMATS: [Format; 4] = [Format::Csv, Format::Json, Format::Md, Format::Svg];

fn parse_metric(s: &str) -> Result<Metric, String> {
    s.parse().map_err(|e: parity_core::Error| e.to_string())
}

#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    /// Dataset CSV.
    #[arg(long)]
    pub data: PathBuf,
    /// Schema JSON; defaults to `<data stem>.schema.json` next to the data.
    #[arg(long)]
    pub schema: Option<PathBuf>,
    /// Protected feature; defaults to the first one the schema declares.
    #[arg(long)]
    pub protected: Option<String>,
    /// Learner(s). Defaults to gbt for audit/thresholds and all for ablate.
    #[arg(long, value_enum)]
    pub algo: Option<AlgoChoice>,
    /// Metric whose group variance picks the threshold and is parity-checked.
    #[arg(long, default_value = "precision", value_parser = parse_metric)]
    pub metric: Metric,
    /// Parity tolerance: every pairwise group difference must be below it.
    #[arg(long, default_value_t = 0.05)]
    pub xi: f64,
    /// Number of top-ranked features considered as proxies.
    #[arg(long, default_value_t = 5)]
    pub k: usize,
    /// Minimum association with the protected feature for a proxy.
    #[arg(long, default_value_t = 0.2)]
    pub tau: f64,
    /// Oversample protected groups in the training split. Defaults to off
    /// for audit/thresholds and both for ablate.
    #[arg(long, value_enum)]
    pub sample: Option<SampleChoice>,
    /// Variance over groups only, or over groups and the overall value.
    #[arg(long, value_enum, default_value = "groups")]
    pub mode: ModeChoice,
    #[arg(long, env = "PARITY_AUDIT_SEED", default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    /// Output formats, comma separated.
    #[arg(long, value_enum, value_delimiter = ',', default_value = "csv,json,md,svg")]
    pub format: Vec<Format>,
    /// Share of each class held out for evaluation.
    #[arg(long, default_value_t = 0.3)]
    pub test_fraction: f64,
    /// Cut points for a numeric protected feature, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub bins: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Args)]
pub struct SynthArgs {
    #[arg(long, default_value_t = 5000)]
    pub rows: usize,
    /// Group proportions, comma separated; one group per entry.
    #[arg(long, value_delimiter = ',', default_value = "0.5,0.5")]
    pub proportions: Vec<f64>,
    /// Positive rate per group, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "0.8,0.2")]
    pub base_rates: Vec<f64>,
    #[arg(long, default_value_t = 3)]
    pub informative: usize,
    #[arg(long, default_value_t = 1.0)]
    pub separation: f64,
    /// How strongly the `proxy` column encodes the group, in [0, 1].
    #[arg(long, default_value_t = 0.0)]
    pub leakage: f64,
    #[arg(long, default_value_t = 0.0)]
    pub noise: f64,
    #[arg(long, env = "PARITY_AUDIT_SEED", default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    /// File stem for `<name>.csv` and `<name>.schema.json`.
    #[arg(long, default_value = "synth")]
    pub name: String,
}

#[derive(Debug, Clone, Args)]
pub struct ReportArgs {
    /// Directory holding the JSON documents of an earlier run.
    #[arg(long)]
    pub input: PathBuf,
    /// Where to write; defaults to the input directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, value_delimiter = ',', default_value = "csv,md,svg")]
    pub format: Vec<Format>,
}
