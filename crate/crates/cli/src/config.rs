use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use parity_core::dataset::{load_csv, resolve_binning, BinningSpec, ColumnKind, Dataset, Schema};
use parity_core::experiments::GridOptions;
use parity_core::fairness::VarianceMode;
use parity_core::metrics::Metric;
use parity_core::models::{Algorithm, ModelConfig};
use serde::{Deserialize, Serialize};

use crate::args::{AlgoChoice, Format, ModeChoice, RunArgs, SampleChoice};

/// Effective configuration of a run with every default resolved. Embedded in
/// each report so a run can be repeated from its own output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub command: String,
    pub data: PathBuf,
    pub schema: PathBuf,
    pub protected: String,
    pub algorithms: Vec<Algorithm>,
    pub metric: Metric,
    pub xi: f64,
    pub k: usize,
    pub tau: f64,
    /// Sigma values run: `false` as drawn, `true` oversampled.
    pub sampling: Vec<bool>,
    pub mode: VarianceMode,
    pub seed: u64,
    pub test_fraction: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub binning: Option<BinningSpec>,
    /// Hyperparameters per algorithm; tree seeds are derived per model.
    pub models: Vec<ModelConfig>,
    pub out: PathBuf,
    pub formats: Vec<Format>,
}

impl RunConfig {
    pub fn grid_options(&self) -> GridOptions {
        GridOptions {
            test_fraction: self.test_fraction,
            k: self.k,
            tau: self.tau,
            metrics: Metric::ALL.to_vec(),
            mode: self.mode,
            binning: self.binning.clone(),
            models: self.models.clone(),
        }
    }

    pub fn wants(&self, format: Format) -> bool {
        self.formats.contains(&format)
    }
}

fn default_schema_path(data: &Path) -> PathBuf {
    let stem = data
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    data.with_file_name(format!("{stem}.schema.json"))
}

/// Validates the arguments, loads the dataset and resolves every default.
pub fn resolve(command: &str, args: &RunArgs) -> Result<(RunConfig, Dataset)> {
    if !(args.xi > 0.0 && args.xi.is_finite()) {
        bail!("--xi must be a positive number, got {}", args.xi);
    }
    if args.k == 0 {
        bail!("--k must be at least 1");
    }
    if !(0.0..=1.0).contains(&args.tau) {
        bail!("--tau must lie in [0, 1], got {}", args.tau);
    }
    if !(args.test_fraction > 0.0 && args.test_fraction < 1.0) {
        bail!("--test-fraction must lie in (0, 1), got {}", args.test_fraction);
    }
    if args.format.is_empty() {
        bail!("--format needs at least one of csv, json, md, svg");
    }

    let schema_path = args
        .schema
        .clone()
        .unwrap_or_else(|| default_schema_path(&args.data));
    if !args.data.exists() {
        bail!("dataset not found: {}", args.data.display());
    }
    if !schema_path.exists() {
        bail!(
            "schema not found: {} (pass --schema)",
            schema_path.display()
        );
    }
    let schema = Schema::from_json_file(&schema_path)
        .with_context(|| format!("reading schema {}", schema_path.display()))?;
    let dataset = load_csv(&args.data, &schema)
        .with_context(|| format!("loading {}", args.data.display()))?;

    let protected = match &args.protected {
        Some(p) => p.clone(),
        None => match schema.protected.first() {
            Some(p) => p.name.clone(),
            None => bail!("the schema declares no protected feature; pass --protected"),
        },
    };
    if !schema.is_protected(&protected) {
        bail!("'{protected}' is not declared as a protected feature in the schema");
    }
    let binning = match &args.bins {
        Some(cuts) => Some(BinningSpec::new(cuts.clone())?),
        None => match schema.column(&protected).map(|c| c.kind) {
            Some(ColumnKind::Numeric) => Some(resolve_binning(&dataset, &protected, None)?),
            _ => None,
        },
    };

    let default_algo = if command == "ablate" || command == "compare" {
        AlgoChoice::All
    } else {
        AlgoChoice::Gbt
    };
    let algorithms = match (command, args.algo.unwrap_or(default_algo)) {
        ("compare", choice) => {
            if choice != AlgoChoice::All {
                log::warn!("compare always runs every algorithm; ignoring --algo");
            }
            Algorithm::ALL.to_vec()
        }
        (_, AlgoChoice::All) if command == "audit" || command == "thresholds" => {
            bail!("{command} trains a single model; choose --algo logreg, forest or gbt")
        }
        (_, AlgoChoice::All) => Algorithm::ALL.to_vec(),
        (_, AlgoChoice::Logreg) => vec![Algorithm::Logreg],
        (_, AlgoChoice::Forest) => vec![Algorithm::Forest],
        (_, AlgoChoice::Gbt) => vec![Algorithm::Gbt],
    };

    let default_sample = if command == "ablate" || command == "compare" {
        SampleChoice::Both
    } else {
        SampleChoice::Off
    };
    let sampling = match (command, args.sample.unwrap_or(default_sample)) {
        ("compare", choice) => {
            if choice != SampleChoice::Both {
                log::warn!("compare always runs with and without oversampling; ignoring --sample");
            }
            vec![false, true]
        }
        (_, SampleChoice::Both) if command == "audit" || command == "thresholds" => {
            bail!("{command} trains a single model; choose --sample on or off")
        }
        (_, SampleChoice::Both) => vec![false, true],
        (_, SampleChoice::On) => vec![true],
        (_, SampleChoice::Off) => vec![false],
    };

    let mut models: Vec<ModelConfig> = algorithms
        .iter()
        .map(|&a| ModelConfig::default_for(a, args.seed))
        .collect();
    // proxy ranking always uses gbt
    if command == "ablate" && !algorithms.contains(&Algorithm::Gbt) {
        models.push(ModelConfig::default_for(Algorithm::Gbt, args.seed));
    }

    let mut formats = args.format.clone();
    formats.sort();
    formats.dedup();

    let config = RunConfig {
        command: command.to_string(),
        data: args.data.clone(),
        schema: schema_path,
        protected,
        models,
        algorithms,
        metric: args.metric,
        xi: args.xi,
        k: args.k,
        tau: args.tau,
        sampling,
        mode: match args.mode {
            ModeChoice::Groups => VarianceMode::GroupsOnly,
            ModeChoice::Overall => VarianceMode::IncludeOverall,
        },
        seed: args.seed,
        test_fraction: args.test_fraction,
        binning,
        out: args.out.clone(),
        formats,
    };
    Ok((config, dataset))
}
