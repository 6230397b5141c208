//! Ablation / sampling grids and the cross-method comparison.
//!
//! Every cell follows the same pipeline: split, optionally oversample the
//! training side by protected group, drop the cell's features, train, score
//! the untouched test rows and evaluate overall and per group at the overall
//! Youden threshold of the test scores. The split, the oversampled training
//! set and the proxy list are computed once per grid and shared by all cells;
//! model seeds are derived from the grid seed and the cell key, so results do
//! not depend on the order cells run in.

use std::collections::BTreeMap;
use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::{
    ablate, oversample, partition_observed, split, BinningSpec, Dataset,
    GroupPartition,
};
use crate::error::{Error, Result};
use crate::fairness::{GroupMetrics, VarianceMode};
use crate::metrics::{evaluate, group_variance, youden_threshold, Metric, MetricValue, MetricVector, YoudenPoint};
use crate::models::{
    association, importance, predict, select_proxies, train, Algorithm, AssociationScore,
    ImportanceRanking, ModelConfig,
};
use crate::seed;

/// Which features a cell trains on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum FeatureMode {
    /// Every feature.
    #[serde(rename = "1")]
    All,
    /// The protected feature removed.
    #[serde(rename = "0")]
    NoProtected,
    /// The protected feature and its proxies removed.
    #[serde(rename = "delta")]
    NoProxies,
}

impl FeatureMode {
    pub const ALL: [FeatureMode; 3] = [FeatureMode::All, FeatureMode::NoProtected, FeatureMode::NoProxies];
}

impl fmt::Display for FeatureMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FeatureMode::All => "1",
            FeatureMode::NoProtected => "0",
            FeatureMode::NoProxies => "Δ",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellSpec {
    pub features: FeatureMode,
    pub sampling: bool,
    pub algorithm: Algorithm,
    pub protected: String,
    pub seed: u64,
    /// Proxy features removed in `NoProxies` cells; computed when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub proxies: Option<Vec<String>>,
}

impl CellSpec {
    pub fn key(&self) -> String {
        format!(
            "{}/F={}/sigma={}",
            self.algorithm,
            match self.features {
                FeatureMode::All => "1",
                FeatureMode::NoProtected => "0",
                FeatureMode::NoProxies => "delta",
            },
            u8::from(self.sampling)
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridOptions {
    pub test_fraction: f64,
    pub k: usize,
    pub tau: f64,
    pub metrics: Vec<Metric>,
    pub mode: VarianceMode,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub binning: Option<BinningSpec>,
    /// Hyperparameters replacing the defaults for an algorithm; the seed is
    /// always replaced by the cell seed.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub models: Vec<ModelConfig>,
}

impl Default for GridOptions {
    fn default() -> Self {
        GridOptions {
            test_fraction: 0.3,
            k: 5,
            tau: 0.2,
            metrics: Metric::ALL.to_vec(),
            mode: VarianceMode::GroupsOnly,
            binning: None,
            models: Vec::new(),
        }
    }
}

impl GridOptions {
    pub fn model_config(&self, algorithm: Algorithm, seed: u64) -> ModelConfig {
        let mut config = self
            .models
            .iter()
            .find(|m| m.algorithm() == algorithm)
            .cloned()
            .unwrap_or_else(|| ModelConfig::default_for(algorithm, seed));
        match &mut config {
            ModelConfig::Forest(p) => p.seed = seed,
            ModelConfig::Gbt(p) => p.seed = seed,
            ModelConfig::Logreg(_) => {}
        }
        config
    }
}

/// Split and resampled training data shared by the cells of one grid.
#[derive(Debug, Clone)]
pub struct PreparedData {
    pub protected: String,
    pub train: Dataset,
    pub oversampled: Dataset,
    pub test: Dataset,
    pub test_partition: GroupPartition,
}

pub fn prepare(
    dataset: &Dataset,
    protected: &str,
    seed: u64,
    options: &GridOptions,
) -> Result<PreparedData> {
    if !dataset.schema().is_protected(protected) {
        return Err(Error::Usage(format!(
            "'{protected}' is not declared as a protected feature"
        )));
    }
    let (train, test) = split(dataset, options.test_fraction, seed)?;
    let train_partition = partition_observed(&train, protected, options.binning.as_ref())?;
    let oversampled = oversample(&train, &train_partition, seed::derive(seed, "oversample"))?;
    let test_partition = partition_observed(&test, protected, options.binning.as_ref())?;
    Ok(PreparedData {
        protected: protected.to_string(),
        train,
        oversampled,
        test,
        test_partition,
    })
}

/// Proxy candidates ranked by a gbt model on all features of the
/// un-resampled training set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProxySelection {
    pub protected: String,
    pub k: usize,
    pub tau: f64,
    pub ranking: ImportanceRanking,
    pub associations: Vec<AssociationScore>,
    pub selected: Vec<String>,
}

pub fn compute_proxies(
    prepared: &PreparedData,
    seed: u64,
    options: &GridOptions,
) -> Result<ProxySelection> {
    let protected = prepared.protected.as_str();
    let config = options.model_config(Algorithm::Gbt, seed::derive(seed, "proxy-ranking"));
    let model = train(&prepared.train, &config)?;
    let mut ranking = importance(&model)?;
    // the protected feature is removed in every Δ cell anyway
    ranking.entries.retain(|(name, _)| name != protected);
    let associations = ranking
        .names()
        .map(|f| association(&prepared.train, f, protected, options.binning.as_ref()))
        .collect::<Result<Vec<_>>>()?;
    let selected = select_proxies(&ranking, &associations, options.k, options.tau);
    Ok(ProxySelection {
        protected: protected.to_string(),
        k: options.k,
        tau: options.tau,
        ranking,
        associations,
        selected,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellResult {
    pub key: String,
    pub spec: CellSpec,
    pub model_config: ModelConfig,
    pub removed: Vec<String>,
    pub threshold: YoudenPoint,
    pub overall: MetricVector,
    pub per_group: Vec<GroupMetrics>,
    pub variance: BTreeMap<Metric, MetricValue>,
    pub train_group_sizes: Vec<(String, usize)>,
    pub test_group_sizes: Vec<(String, usize)>,
    pub test_rows: Vec<usize>,
}

impl CellResult {
    pub fn group_values(&self, metric: Metric) -> Vec<MetricValue> {
        self.per_group.iter().map(|g| g.metrics.get(metric)).collect()
    }
}

fn group_sizes(p: &GroupPartition) -> Vec<(String, usize)> {
    p.groups.iter().map(|g| (g.label.clone(), g.rows.len())).collect()
}

/// Runs one cell against shared prepared data. `grid_seed` seeds the model
/// through the cell key.
pub fn run_prepared_cell(
    prepared: &PreparedData,
    spec: &CellSpec,
    grid_seed: u64,
    options: &GridOptions,
) -> Result<CellResult> {
    let protected = prepared.protected.as_str();
    let base = if spec.sampling {
        &prepared.oversampled
    } else {
        &prepared.train
    };
    let removed: Vec<String> = match spec.features {
        FeatureMode::All => Vec::new(),
        FeatureMode::NoProtected => vec![protected.to_string()],
        FeatureMode::NoProxies => {
            let proxies = spec.proxies.as_ref().ok_or_else(|| {
                Error::Usage("a proxy-removal cell needs a proxy list".into())
            })?;
            let mut r = vec![protected.to_string()];
            r.extend(proxies.iter().filter(|p| *p != protected).cloned());
            r
        }
    };
    let training = ablate(base, &removed)?;
    let train_partition = partition_observed(base, protected, options.binning.as_ref())?;

    let model_config = options.model_config(spec.algorithm, seed::derive(grid_seed, &spec.key()));
    let model = train(&training, &model_config)?;
    let scores = predict(&model, &prepared.test)?;
    let threshold = youden_threshold(&scores)?;

    let per_group: Vec<GroupMetrics> = prepared
        .test_partition
        .groups
        .iter()
        .map(|g| {
            let metrics = evaluate(&scores.subset(&g.rows), threshold.threshold);
            if !metrics.flags.is_empty() {
                log::warn!(
                    "cell {}: group '{}' has degenerate metrics {:?}",
                    spec.key(),
                    g.label,
                    metrics.flags
                );
            }
            GroupMetrics {
                group: g.label.clone(),
                metrics,
            }
        })
        .collect();
    let overall = evaluate(&scores, threshold.threshold);
    let variance = options
        .metrics
        .iter()
        .map(|&m| {
            let mut values: Vec<MetricValue> = per_group.iter().map(|g| g.metrics.get(m)).collect();
            if options.mode == VarianceMode::IncludeOverall {
                values.push(overall.get(m));
            }
            (m, group_variance(&values))
        })
        .collect();

    Ok(CellResult {
        key: spec.key(),
        spec: spec.clone(),
        model_config,
        removed,
        threshold,
        overall,
        per_group,
        variance,
        train_group_sizes: group_sizes(&train_partition),
        test_group_sizes: group_sizes(&prepared.test_partition),
        test_rows: prepared.test.row_ids().to_vec(),
    })
}

/// Runs a single cell from scratch, computing the proxy list when a
/// proxy-removal cell does not carry one.
pub fn run_cell(dataset: &Dataset, spec: &CellSpec, options: &GridOptions) -> Result<CellResult> {
    let prepared = prepare(dataset, &spec.protected, spec.seed, options)?;
    let mut spec = spec.clone();
    if spec.features == FeatureMode::NoProxies && spec.proxies.is_none() {
        spec.proxies = Some(compute_proxies(&prepared, spec.seed, options)?.selected);
    }
    run_prepared_cell(&prepared, &spec, spec.seed, options)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Increase,
    Decrease,
    Unchanged,
}

impl Direction {
    pub fn of(delta: f64) -> Direction {
        if delta > 0.0 {
            Direction::Increase
        } else if delta < 0.0 {
            Direction::Decrease
        } else {
            Direction::Unchanged
        }
    }

    pub fn marker(self) -> &'static str {
        match self {
            Direction::Increase => "+",
            Direction::Decrease => "-",
            Direction::Unchanged => "",
        }
    }
}

/// Absolute change of a metric, `comparison - baseline`.
pub fn metric_delta(baseline: f64, comparison: f64) -> f64 {
    comparison - baseline
}

/// Relative change of a variance, `(comparison - baseline) / baseline`;
/// undefined for a zero baseline.
pub fn relative_change(baseline: f64, comparison: f64) -> MetricValue {
    if baseline == 0.0 {
        MetricValue::undefined()
    } else {
        MetricValue::defined((comparison - baseline) / baseline)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Change {
    pub baseline: MetricValue,
    pub comparison: MetricValue,
    pub delta: MetricValue,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub direction: Option<Direction>,
}

impl Change {
    fn between(baseline: MetricValue, comparison: MetricValue) -> Change {
        let delta: MetricValue = match (baseline.get(), comparison.get()) {
            (Some(b), Some(c)) => Some(metric_delta(b, c)),
            _ => None,
        }
        .into();
        Change {
            baseline,
            comparison,
            delta,
            direction: delta.get().map(Direction::of),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricDelta {
    pub metric: Metric,
    pub overall: Change,
    pub per_group: Vec<(String, Change)>,
    pub variance_baseline: MetricValue,
    pub variance_comparison: MetricValue,
    pub variance_change: MetricValue,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub variance_direction: Option<Direction>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeltaReport {
    pub baseline: String,
    pub comparison: String,
    pub metrics: Vec<MetricDelta>,
}

pub fn delta_report(baseline: &CellResult, comparison: &CellResult) -> Result<DeltaReport> {
    let groups = |c: &CellResult| c.per_group.iter().map(|g| g.group.clone()).collect::<Vec<_>>();
    if groups(baseline) != groups(comparison) {
        return Err(Error::Usage(format!(
            "cells {} and {} were evaluated on different groups",
            baseline.key, comparison.key
        )));
    }
    let metrics: Vec<Metric> = baseline.variance.keys().copied().collect();
    if metrics != comparison.variance.keys().copied().collect::<Vec<_>>() {
        return Err(Error::Usage(format!(
            "cells {} and {} report different metrics",
            baseline.key, comparison.key
        )));
    }
    let metrics = metrics
        .into_iter()
        .map(|m| {
            let per_group = baseline
                .per_group
                .iter()
                .zip(&comparison.per_group)
                .map(|(b, c)| (b.group.clone(), Change::between(b.metrics.get(m), c.metrics.get(m))))
                .collect();
            let vb = baseline.variance[&m];
            let vc = comparison.variance[&m];
            let variance_change = match (vb.get(), vc.get()) {
                (Some(b), Some(c)) => relative_change(b, c),
                _ => MetricValue::undefined(),
            };
            MetricDelta {
                metric: m,
                overall: Change::between(baseline.overall.get(m), comparison.overall.get(m)),
                per_group,
                variance_baseline: vb,
                variance_comparison: vc,
                variance_change,
                variance_direction: variance_change.get().map(Direction::of),
            }
        })
        .collect();
    Ok(DeltaReport {
        baseline: baseline.key.clone(),
        comparison: comparison.key.clone(),
        metrics,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridResult {
    pub protected: String,
    pub seed: u64,
    pub options: GridOptions,
    pub algorithms: Vec<Algorithm>,
    pub sampling: Vec<bool>,
    pub proxies: ProxySelection,
    pub test_rows: Vec<usize>,
    pub cells: Vec<CellResult>,
    pub deltas: Vec<DeltaReport>,
}

impl GridResult {
    pub fn cell(&self, algorithm: Algorithm, features: FeatureMode, sampling: bool) -> Option<&CellResult> {
        self.cells.iter().find(|c| {
            c.spec.algorithm == algorithm && c.spec.features == features && c.spec.sampling == sampling
        })
    }
}

fn run_specs(
    prepared: &PreparedData,
    specs: &[CellSpec],
    seed: u64,
    options: &GridOptions,
) -> Result<Vec<CellResult>> {
    specs
        .par_iter()
        .map(|s| run_prepared_cell(prepared, s, seed, options))
        .collect()
}

/// All `F x sigma x algorithm` cells on one shared split, with deltas of
/// `F=0` and `F=Δ` against `F=1` within each sampling setting. `sampling`
/// lists the sigma values to run (`false` = as drawn, `true` = oversampled).
pub fn ablation_grid(
    dataset: &Dataset,
    protected: &str,
    algorithms: &[Algorithm],
    sampling: &[bool],
    seed: u64,
    options: &GridOptions,
) -> Result<GridResult> {
    if algorithms.is_empty() {
        return Err(Error::Usage("no algorithms selected".into()));
    }
    if sampling.is_empty() {
        return Err(Error::Usage("no sampling setting selected".into()));
    }
    let prepared = prepare(dataset, protected, seed, options)?;
    let proxies = compute_proxies(&prepared, seed, options)?;
    let mut specs = Vec::new();
    for &sampling in sampling {
        for &algorithm in algorithms {
            for features in FeatureMode::ALL {
                specs.push(CellSpec {
                    features,
                    sampling,
                    algorithm,
                    protected: protected.to_string(),
                    seed,
                    proxies: (features == FeatureMode::NoProxies).then(|| proxies.selected.clone()),
                });
            }
        }
    }
    let cells = run_specs(&prepared, &specs, seed, options)?;
    let mut deltas = Vec::new();
    for chunk in cells.chunks(FeatureMode::ALL.len()) {
        deltas.push(delta_report(&chunk[0], &chunk[1])?);
        deltas.push(delta_report(&chunk[0], &chunk[2])?);
    }
    Ok(GridResult {
        protected: protected.to_string(),
        seed,
        options: options.clone(),
        algorithms: algorithms.to_vec(),
        sampling: sampling.to_vec(),
        proxies,
        test_rows: prepared.test.row_ids().to_vec(),
        cells,
        deltas,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub label: String,
    pub with_protected: bool,
    pub sampling: bool,
    /// In `MethodComparison::algorithms` order.
    pub auc: Vec<MetricValue>,
    pub variance: Vec<MetricValue>,
    pub thresholds: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ranking {
    pub scope: String,
    /// Ascending: the first algorithm has the lowest value.
    pub by_auc: Vec<Algorithm>,
    pub by_variance: Vec<Algorithm>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodComparison {
    pub protected: String,
    pub seed: u64,
    pub options: GridOptions,
    pub algorithms: Vec<Algorithm>,
    pub rows: Vec<ComparisonRow>,
    /// One ranking per row, then one over the row means (`scope = "mean"`).
    /// The AUC and variance orders are independent of each other.
    pub rankings: Vec<Ranking>,
}

fn ascending(algorithms: &[Algorithm], values: &[MetricValue]) -> Vec<Algorithm> {
    let mut pairs: Vec<(Algorithm, f64)> = algorithms
        .iter()
        .zip(values)
        .map(|(&a, v)| (a, v.get().unwrap_or(f64::NAN)))
        .collect();
    pairs.sort_by(|a, b| a.1.total_cmp(&b.1));
    pairs.into_iter().map(|(a, _)| a).collect()
}

fn mean(values: impl Iterator<Item = MetricValue>) -> MetricValue {
    let v: Vec<f64> = values.filter_map(MetricValue::get).collect();
    if v.is_empty() {
        MetricValue::undefined()
    } else {
        MetricValue::defined(v.iter().sum::<f64>() / v.len() as f64)
    }
}

/// AUC and AUC group variance of every algorithm, with and without the
/// protected feature, before and after oversampling.
pub fn compare_methods(
    dataset: &Dataset,
    protected: &str,
    seed: u64,
    options: &GridOptions,
) -> Result<MethodComparison> {
    let algorithms = Algorithm::ALL.to_vec();
    let prepared = prepare(dataset, protected, seed, options)?;
    let layout = [(true, false), (false, false), (true, true), (false, true)];
    let mut specs = Vec::new();
    for &(with_protected, sampling) in &layout {
        for &algorithm in &algorithms {
            specs.push(CellSpec {
                features: if with_protected {
                    FeatureMode::All
                } else {
                    FeatureMode::NoProtected
                },
                sampling,
                algorithm,
                protected: protected.to_string(),
                seed,
                proxies: None,
            });
        }
    }
    let mut options = options.clone();
    if !options.metrics.contains(&Metric::Auc) {
        options.metrics.push(Metric::Auc);
    }
    let cells = run_specs(&prepared, &specs, seed, &options)?;
    let rows: Vec<ComparisonRow> = layout
        .iter()
        .zip(cells.chunks(algorithms.len()))
        .map(|(&(with_protected, sampling), chunk)| ComparisonRow {
            label: format!(
                "{} '{}', {} sampling",
                if with_protected { "with" } else { "without" },
                protected,
                if sampling { "after" } else { "before" }
            ),
            with_protected,
            sampling,
            auc: chunk.iter().map(|c| c.overall.auc).collect(),
            variance: chunk.iter().map(|c| c.variance[&Metric::Auc]).collect(),
            thresholds: chunk.iter().map(|c| c.threshold.threshold).collect(),
        })
        .collect();
    let mut rankings: Vec<Ranking> = rows
        .iter()
        .map(|r| Ranking {
            scope: r.label.clone(),
            by_auc: ascending(&algorithms, &r.auc),
            by_variance: ascending(&algorithms, &r.variance),
        })
        .collect();
    let mean_auc: Vec<MetricValue> = (0..algorithms.len())
        .map(|k| mean(rows.iter().map(|r| r.auc[k])))
        .collect();
    let mean_var: Vec<MetricValue> = (0..algorithms.len())
        .map(|k| mean(rows.iter().map(|r| r.variance[k])))
        .collect();
    rankings.push(Ranking {
        scope: "mean".into(),
        by_auc: ascending(&algorithms, &mean_auc),
        by_variance: ascending(&algorithms, &mean_var),
    });
    Ok(MethodComparison {
        protected: protected.to_string(),
        seed,
        options,
        algorithms,
        rows,
        rankings,
    })
}
