use std::io::Write as _;
use std::path::Path;

use anyhow::{bail, Context, Result};
use parity_core::dataset::{partition_observed, synth_gen, synth_schema, Column, Dataset, SynthConfig, SynthGroup};
use parity_core::experiments::{ablation_grid, compare_methods, prepare};
use parity_core::fairness::{boundary, fairness_threshold, parity_check};
use parity_core::metrics::Metric;
use parity_core::models::{predict, train};

use crate::args::{Format, ReportArgs, RunArgs, SynthArgs};
use crate::config::{resolve, RunConfig};
use crate::report::{
    emit_audit, emit_compare, emit_grid, AuditReport, CompareReport, Emitter, GridReport, AUDIT_JSON,
    COMPARE_JSON, GRID_JSON, THRESHOLDS_JSON,
};

/// How a successful invocation ended; maps onto the process exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Done,
    ParityPass,
    ParityFail,
}

impl Outcome {
    pub fn code(self) -> u8 {
        match self {
            Outcome::Done | Outcome::ParityPass => 0,
            Outcome::ParityFail => 2,
        }
    }
}

/// Splits, trains one model and builds the boundary and fairness choice at
/// the configured metric; the parity verdict is added when `with_parity`.
pub fn run_audit(config: &RunConfig, dataset: &Dataset, with_parity: bool) -> Result<AuditReport> {
    let options = config.grid_options();
    let prepared = prepare(dataset, &config.protected, config.seed, &options)?;
    let sampling = config.sampling[0];
    let train_set = if sampling { &prepared.oversampled } else { &prepared.train };
    let model_config = config.models[0].clone();
    let model = train(train_set, &model_config)?;
    let scores = predict(&model, &prepared.test)?;

    let table = boundary(&scores, &prepared.test_partition, &Metric::ALL)?;
    let choice = fairness_threshold(&table, config.metric, config.mode)
        .with_context(|| format!("choosing a threshold by {} variance", config.metric))?;
    let row = table
        .row(&choice.selected)
        .context("selected candidate missing from the boundary table")?;
    let per_group = row.per_group.clone();
    let overall = row.overall.clone();
    let parity = with_parity.then(|| {
        let values: Vec<_> = per_group
            .iter()
            .map(|g| (g.group.clone(), g.metrics.get(config.metric)))
            .collect();
        parity_check(config.metric, &values, config.xi)
    });
    let sizes = |d: &Dataset| -> Result<Vec<(String, usize)>> {
        Ok(partition_observed(d, &config.protected, config.binning.as_ref())?
            .groups
            .iter()
            .map(|g| (g.label.clone(), g.rows.len()))
            .collect())
    };
    Ok(AuditReport {
        config: config.clone(),
        algorithm: model_config.algorithm(),
        model: model_config,
        sampling,
        train_rows: train_set.len(),
        test_rows: prepared.test.len(),
        train_group_sizes: sizes(train_set)?,
        test_group_sizes: sizes(&prepared.test)?,
        boundary: table,
        choice,
        overall,
        per_group,
        parity,
    })
}

pub fn cmd_audit(args: &RunArgs) -> Result<Outcome> {
    let (config, dataset) = resolve("audit", args)?;
    let report = run_audit(&config, &dataset, true)?;
    emit_audit(&report, &mut Emitter::new(&config.out, &config.formats)?)?;
    Ok(parity_outcome(&report))
}

fn parity_outcome(report: &AuditReport) -> Outcome {
    match &report.parity {
        Some(p) if p.pass => Outcome::ParityPass,
        Some(_) => Outcome::ParityFail,
        None => Outcome::Done,
    }
}

pub fn cmd_thresholds(args: &RunArgs) -> Result<Outcome> {
    let (config, dataset) = resolve("thresholds", args)?;
    let report = run_audit(&config, &dataset, false)?;
    emit_audit(&report, &mut Emitter::new(&config.out, &config.formats)?)?;
    Ok(Outcome::Done)
}

pub fn cmd_ablate(args: &RunArgs) -> Result<Outcome> {
    let (config, dataset) = resolve("ablate", args)?;
    let grid = ablation_grid(
        &dataset,
        &config.protected,
        &config.algorithms,
        &config.sampling,
        config.seed,
        &config.grid_options(),
    )?;
    let report = GridReport { config, grid };
    emit_grid(&report, &mut Emitter::new(&report.config.out, &report.config.formats)?)?;
    Ok(Outcome::Done)
}

pub fn cmd_compare(args: &RunArgs) -> Result<Outcome> {
    let (config, dataset) = resolve("compare", args)?;
    let comparison = compare_methods(&dataset, &config.protected, config.seed, &config.grid_options())?;
    let report = CompareReport { config, comparison };
    emit_compare(&report, &mut Emitter::new(&report.config.out, &report.config.formats)?)?;
    Ok(Outcome::Done)
}

/// Writes a dataset as CSV in schema column order; the target is written as
/// `positive` / `negative`.
pub fn write_dataset_csv<W: std::io::Write>(
    dataset: &Dataset,
    positive: &str,
    negative: &str,
    writer: W,
) -> Result<()> {
    let schema = dataset.schema();
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(schema.columns.iter().map(|c| c.name.as_str()))?;
    for row in 0..dataset.len() {
        let mut rec = Vec::with_capacity(schema.columns.len());
        for c in &schema.columns {
            if c.name == schema.target {
                rec.push(if dataset.labels()[row] == 1 { positive } else { negative }.to_string());
                continue;
            }
            let cell = match dataset.column(&c.name) {
                Some(Column::Numeric(v)) => v[row].map(|x| x.to_string()),
                Some(Column::Categorical(v)) => v[row].clone(),
                None => None,
            };
            rec.push(cell.unwrap_or_else(|| schema.missing_token.clone()));
        }
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

pub fn synth_config(args: &SynthArgs) -> Result<SynthConfig> {
    if args.proportions.len() != args.base_rates.len() {
        bail!(
            "--proportions has {} entries but --base-rates has {}",
            args.proportions.len(),
            args.base_rates.len()
        );
    }
    let groups = args
        .proportions
        .iter()
        .zip(&args.base_rates)
        .enumerate()
        .map(|(k, (&proportion, &base_rate))| SynthGroup {
            name: group_name(k),
            proportion,
            base_rate,
        })
        .collect();
    let config = SynthConfig {
        rows: args.rows,
        groups,
        informative: args.informative,
        separation: args.separation,
        leakage: args.leakage,
        label_noise: args.noise,
        seed: args.seed,
    };
    config.validate()?;
    Ok(config)
}

fn group_name(k: usize) -> String {
    let mut s = String::new();
    let mut k = k;
    loop {
        s.insert(0, (b'A' + (k % 26) as u8) as char);
        if k < 26 {
            return s;
        }
        k = k / 26 - 1;
    }
}

pub fn cmd_synth(args: &SynthArgs) -> Result<Outcome> {
    let config = synth_config(args)?;
    let dataset = synth_gen(&config)?;
    let schema = synth_schema(&config);
    std::fs::create_dir_all(&args.out)
        .with_context(|| format!("creating output directory {}", args.out.display()))?;
    let csv_path = args.out.join(format!("{}.csv", args.name));
    let mut buf = Vec::new();
    write_dataset_csv(&dataset, &schema.positive_label, "0", &mut buf)?;
    std::fs::write(&csv_path, buf).with_context(|| format!("writing {}", csv_path.display()))?;
    let schema_path = args.out.join(format!("{}.schema.json", args.name));
    let mut file = std::fs::File::create(&schema_path)
        .with_context(|| format!("writing {}", schema_path.display()))?;
    serde_json::to_writer_pretty(&mut file, &schema)?;
    writeln!(file)?;
    let config_path = args.out.join(format!("{}.config.json", args.name));
    std::fs::write(&config_path, serde_json::to_string_pretty(&config)? + "\n")
        .with_context(|| format!("writing {}", config_path.display()))?;
    Ok(Outcome::Done)
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

/// Re-renders CSV, markdown and SVG from saved JSON documents.
pub fn cmd_report(args: &ReportArgs) -> Result<Outcome> {
    let out_dir = args.out.clone().unwrap_or_else(|| args.input.clone());
    let formats: Vec<Format> = args.format.iter().copied().filter(|f| *f != Format::Json).collect();
    let mut emitter = Emitter::new(&out_dir, &formats)?;
    let mut outcome = None;
    for name in [AUDIT_JSON, THRESHOLDS_JSON] {
        let path = args.input.join(name);
        if path.exists() {
            let report: AuditReport = read_json(&path)?;
            emit_audit(&report, &mut emitter)?;
            outcome = Some(parity_outcome(&report));
        }
    }
    let path = args.input.join(GRID_JSON);
    if path.exists() {
        emit_grid(&read_json(&path)?, &mut emitter)?;
        outcome.get_or_insert(Outcome::Done);
    }
    let path = args.input.join(COMPARE_JSON);
    if path.exists() {
        let report: CompareReport = read_json(&path)?;
        emit_compare(&report, &mut emitter)?;
        outcome.get_or_insert(Outcome::Done);
    }
    outcome.with_context(|| {
        format!(
            "no report documents ({AUDIT_JSON}, {THRESHOLDS_JSON}, {GRID_JSON}, {COMPARE_JSON}) in {}",
            args.input.display()
        )
    })
}
