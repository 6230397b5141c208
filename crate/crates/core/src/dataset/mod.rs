//! Tabular datasets: ingestion, group partitions, splitting, oversampling
//! and ablation.

mod partition;
mod schema;
mod synth;

use std::collections::{BTreeSet, HashMap};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed;

pub use partition::{partition, partition_observed, resolve_binning, Group, GroupPartition};
pub use schema::{BinningSpec, ColumnKind, ColumnSpec, ProtectedSpec, Schema};
pub use synth::{synth_gen, synth_schema, SynthConfig, SynthGroup};

/// Which side of a train/test split a dataset came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SplitRole {
    Full,
    Train,
    Test,
}

/// Values of one feature column. `None` marks a missing value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "values", rename_all = "lowercase")]
pub enum Column {
    Numeric(Vec<Option<f64>>),
    Categorical(Vec<Option<String>>),
}

impl Column {
    pub fn kind(&self) -> ColumnKind {
        match self {
            Column::Numeric(_) => ColumnKind::Numeric,
            Column::Categorical(_) => ColumnKind::Categorical,
        }
    }

    pub fn len(&self) -> usize {
        match self {
            Column::Numeric(v) => v.len(),
            Column::Categorical(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn value(&self, row: usize) -> Value<'_> {
        match self {
            Column::Numeric(v) => v[row].map_or(Value::Missing, Value::Number),
            Column::Categorical(v) => v[row]
                .as_deref()
                .map_or(Value::Missing, Value::Category),
        }
    }

    fn select(&self, rows: &[usize]) -> Column {
        match self {
            Column::Numeric(v) => Column::Numeric(rows.iter().map(|&i| v[i]).collect()),
            Column::Categorical(v) => {
                Column::Categorical(rows.iter().map(|&i| v[i].clone()).collect())
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Value<'a> {
    Number(f64),
    Category(&'a str),
    Missing,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureColumn {
    pub name: String,
    pub data: Column,
}

/// Feature columns plus binary labels. Immutable once built; every
/// transformation returns a new dataset.
///
/// `row_ids` carry each row's index in the originally loaded dataset, so
/// subsets and oversampled copies stay traceable to their source rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    schema: Schema,
    features: Vec<FeatureColumn>,
    labels: Vec<u8>,
    row_ids: Vec<usize>,
    role: SplitRole,
}

impl Dataset {
    /// Builds a dataset from feature columns laid out as `schema.features()`.
    pub fn new(schema: Schema, features: Vec<FeatureColumn>, labels: Vec<u8>) -> Result<Self> {
        schema.validate()?;
        let expected: Vec<&ColumnSpec> = schema.features().collect();
        if expected.len() != features.len() {
            return Err(Error::Schema(format!(
                "schema declares {} feature columns, got {}",
                expected.len(),
                features.len()
            )));
        }
        for (spec, col) in expected.iter().zip(&features) {
            if spec.name != col.name || spec.kind != col.data.kind() {
                return Err(Error::Schema(format!(
                    "column '{}' ({:?}) does not match schema entry '{}' ({:?})",
                    col.name,
                    col.data.kind(),
                    spec.name,
                    spec.kind
                )));
            }
            if col.data.len() != labels.len() {
                return Err(Error::Schema(format!(
                    "column '{}' has {} values for {} labels",
                    col.name,
                    col.data.len(),
                    labels.len()
                )));
            }
        }
        if labels.iter().any(|&y| y > 1) {
            return Err(Error::Target {
                column: schema.target.clone(),
                message: "labels must be 0 or 1".into(),
            });
        }
        let row_ids = (0..labels.len()).collect();
        Ok(Dataset {
            schema,
            features,
            labels,
            row_ids,
            role: SplitRole::Full,
        })
    }

    pub fn schema(&self) -> &Schema {
        &self.schema
    }

    pub fn features(&self) -> &[FeatureColumn] {
        &self.features
    }

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    pub fn row_ids(&self) -> &[usize] {
        &self.row_ids
    }

    pub fn role(&self) -> SplitRole {
        self.role
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn positives(&self) -> usize {
        self.labels.iter().filter(|&&y| y == 1).count()
    }

    pub fn column(&self, name: &str) -> Option<&Column> {
        self.features
            .iter()
            .find(|f| f.name == name)
            .map(|f| &f.data)
    }

    pub fn value(&self, row: usize, column: &str) -> Option<Value<'_>> {
        self.column(column).map(|c| c.value(row))
    }

    /// Rows at `rows`, in that order; indices may repeat.
    pub fn subset(&self, rows: &[usize]) -> Dataset {
        Dataset {
            schema: self.schema.clone(),
            features: self
                .features
                .iter()
                .map(|f| FeatureColumn {
                    name: f.name.clone(),
                    data: f.data.select(rows),
                })
                .collect(),
            labels: rows.iter().map(|&i| self.labels[i]).collect(),
            row_ids: rows.iter().map(|&i| self.row_ids[i]).collect(),
            role: self.role,
        }
    }

    pub fn with_role(mut self, role: SplitRole) -> Dataset {
        self.role = role;
        self
    }
}

/// Loads a CSV file whose header names the schema's columns (in any order).
pub fn load_csv(path: impl AsRef<Path>, schema: &Schema) -> Result<Dataset> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_csv(file, schema)
}

pub fn read_csv<R: std::io::Read>(reader: R, schema: &Schema) -> Result<Dataset> {
    schema.validate()?;
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let header: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    let position: HashMap<&str, usize> = header
        .iter()
        .enumerate()
        .map(|(i, h)| (h.as_str(), i))
        .collect();

    let missing: Vec<String> = schema
        .columns
        .iter()
        .filter(|c| !position.contains_key(c.name.as_str()))
        .map(|c| c.name.clone())
        .collect();
    if !missing.is_empty() {
        return Err(Error::MissingColumns(missing));
    }
    for h in &header {
        if schema.column(h).is_none() {
            log::warn!("ignoring CSV column '{h}' not declared in the schema");
        }
    }

    let specs: Vec<&ColumnSpec> = schema.features().collect();
    let mut columns: Vec<Column> = specs
        .iter()
        .map(|s| match s.kind {
            ColumnKind::Numeric => Column::Numeric(Vec::new()),
            ColumnKind::Categorical => Column::Categorical(Vec::new()),
        })
        .collect();
    let target_pos = position[schema.target.as_str()];
    let mut raw_labels = Vec::new();

    for (i, record) in rdr.records().enumerate() {
        let record = record?;
        // header is line 1
        let line = i + 2;
        for (spec, col) in specs.iter().zip(columns.iter_mut()) {
            let raw = record.get(position[spec.name.as_str()]).unwrap_or("");
            let missing = raw == schema.missing_token;
            match col {
                Column::Numeric(v) => {
                    if missing {
                        v.push(None);
                    } else {
                        let x: f64 = raw.parse().map_err(|_| Error::Parse {
                            row: line,
                            column: spec.name.clone(),
                            value: raw.to_string(),
                        })?;
                        if !x.is_finite() {
                            return Err(Error::Parse {
                                row: line,
                                column: spec.name.clone(),
                                value: raw.to_string(),
                            });
                        }
                        v.push(Some(x));
                    }
                }
                Column::Categorical(v) => {
                    v.push(if missing { None } else { Some(raw.to_string()) });
                }
            }
        }
        let label = record.get(target_pos).unwrap_or("");
        if label == schema.missing_token {
            return Err(Error::Target {
                column: schema.target.clone(),
                message: format!("missing label at row {line}"),
            });
        }
        raw_labels.push(label.to_string());
    }

    let labels = map_labels(&raw_labels, schema)?;
    if labels.is_empty() {
        log::warn!("dataset has a header but no data rows");
    }
    let features = specs
        .iter()
        .zip(columns)
        .map(|(s, data)| FeatureColumn {
            name: s.name.clone(),
            data,
        })
        .collect();
    Dataset::new(schema.clone(), features, labels)
}

fn is_positive(raw: &str, positive: &str) -> bool {
    if raw == positive {
        return true;
    }
    match (raw.parse::<f64>(), positive.parse::<f64>()) {
        (Ok(a), Ok(b)) => a == b,
        _ => false,
    }
}

fn map_labels(raw: &[String], schema: &Schema) -> Result<Vec<u8>> {
    let positive = schema.positive_label.trim();
    let labels: Vec<u8> = raw.iter().map(|r| u8::from(is_positive(r, positive))).collect();
    if raw.is_empty() {
        return Ok(labels);
    }
    if !labels.contains(&1) {
        let seen: BTreeSet<&str> = raw.iter().map(String::as_str).collect();
        return Err(Error::Target {
            column: schema.target.clone(),
            message: format!(
                "positive label '{}' does not occur (values seen: {})",
                positive,
                seen.into_iter().collect::<Vec<_>>().join(", ")
            ),
        });
    }
    let negatives: BTreeSet<&str> = raw
        .iter()
        .zip(&labels)
        .filter(|(_, &y)| y == 0)
        .map(|(r, _)| r.as_str())
        .collect();
    if negatives.len() > 1 {
        return Err(Error::Target {
            column: schema.target.clone(),
            message: format!(
                "target is not binary: values other than '{}' are {}",
                positive,
                negatives.into_iter().collect::<Vec<_>>().join(", ")
            ),
        });
    }
    Ok(labels)
}

/// Label-stratified train/test split. Each class contributes
/// `round(n_class * test_fraction)` rows to the test side; both sides keep
/// the original row order.
pub fn split(dataset: &Dataset, test_fraction: f64, seed: u64) -> Result<(Dataset, Dataset)> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(Error::Config(format!(
            "test fraction must lie in (0, 1), got {test_fraction}"
        )));
    }
    if dataset.is_empty() {
        return Err(Error::Stratify("dataset is empty".into()));
    }
    let mut rng = seed::rng(seed);
    let mut in_test = vec![false; dataset.len()];
    for class in [0u8, 1] {
        let mut idx: Vec<usize> = (0..dataset.len())
            .filter(|&i| dataset.labels[i] == class)
            .collect();
        let n_test = (idx.len() as f64 * test_fraction).round() as usize;
        if n_test == 0 || n_test == idx.len() {
            return Err(Error::Stratify(format!(
                "class {class} has {} row(s), too few to place in both train and test at fraction {test_fraction}",
                idx.len()
            )));
        }
        idx.shuffle(&mut rng);
        for &i in &idx[..n_test] {
            in_test[i] = true;
        }
    }
    let (test_rows, train_rows): (Vec<usize>, Vec<usize>) =
        (0..dataset.len()).partition(|&i| in_test[i]);
    Ok((
        dataset.subset(&train_rows).with_role(SplitRole::Train),
        dataset.subset(&test_rows).with_role(SplitRole::Test),
    ))
}

/// Duplicates rows (sampling with replacement) of every smaller group until
/// all groups match the largest one. Originals come first, in order, and
/// duplicates are appended group by group.
pub fn oversample(train: &Dataset, partition: &GroupPartition, seed: u64) -> Result<Dataset> {
    if train.role != SplitRole::Train {
        return Err(Error::Usage(format!(
            "oversampling applies to training data only, got a {:?} dataset",
            train.role
        )));
    }
    if !partition.covers(train.len()) {
        return Err(Error::Usage(format!(
            "partition on '{}' was not computed on this training set",
            partition.feature
        )));
    }
    let target = partition.groups.iter().map(|g| g.rows.len()).max().unwrap_or(0);
    let mut rng = seed::rng(seed);
    let mut rows: Vec<usize> = (0..train.len()).collect();
    for group in &partition.groups {
        for _ in group.rows.len()..target {
            rows.push(group.rows[rng.random_range(0..group.rows.len())]);
        }
    }
    Ok(train.subset(&rows))
}

/// Removes `drop` from the feature set. Rows and labels are untouched and
/// protected declarations of dropped columns survive as metadata.
pub fn ablate<S: AsRef<str>>(dataset: &Dataset, drop: &[S]) -> Result<Dataset> {
    let drop: BTreeSet<&str> = drop.iter().map(AsRef::as_ref).collect();
    if drop.contains(dataset.schema.target.as_str()) {
        return Err(Error::Usage(format!(
            "cannot drop the target column '{}'",
            dataset.schema.target
        )));
    }
    let unknown: Vec<String> = drop
        .iter()
        .filter(|d| dataset.column(d).is_none())
        .map(|d| d.to_string())
        .collect();
    if !unknown.is_empty() {
        return Err(Error::MissingColumns(unknown));
    }
    let mut schema = dataset.schema.clone();
    schema.columns.retain(|c| !drop.contains(c.name.as_str()));
    schema
        .dropped
        .extend(drop.iter().map(|d| d.to_string()));
    let mut out = dataset.clone();
    out.schema = schema;
    out.features.retain(|f| !drop.contains(f.name.as_str()));
    Ok(out)
}
