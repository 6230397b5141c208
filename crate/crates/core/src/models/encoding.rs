//! Feature encoding captured at training time: one-hot categoricals over
//! the training dictionary, median-imputed standardised numerics.

use serde::{Deserialize, Serialize};

use crate::dataset::{Column, ColumnKind, Dataset};
use crate::error::{Error, Result};

/// Category used for missing categorical values.
pub const MISSING_CATEGORY: &str = "(missing)";

/// Dense row-major matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let cols = rows.first().map_or(0, Vec::len);
        Matrix {
            rows: rows.len(),
            cols,
            data: rows.iter().flatten().copied().collect(),
        }
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum EncodedFeature {
    Numeric {
        name: String,
        median: f64,
        mean: f64,
        std: f64,
    },
    Categorical {
        name: String,
        categories: Vec<String>,
    },
}

impl EncodedFeature {
    pub fn name(&self) -> &str {
        match self {
            EncodedFeature::Numeric { name, .. } | EncodedFeature::Categorical { name, .. } => name,
        }
    }

    fn width(&self) -> usize {
        match self {
            EncodedFeature::Numeric { .. } => 1,
            EncodedFeature::Categorical { categories, .. } => categories.len(),
        }
    }

    fn kind(&self) -> ColumnKind {
        match self {
            EncodedFeature::Numeric { .. } => ColumnKind::Numeric,
            EncodedFeature::Categorical { .. } => ColumnKind::Categorical,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureEncoder {
    pub features: Vec<EncodedFeature>,
}

fn median(values: &mut [f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    values.sort_by(f64::total_cmp);
    let m = values.len() / 2;
    if values.len() % 2 == 1 {
        values[m]
    } else {
        (values[m - 1] + values[m]) / 2.0
    }
}

impl FeatureEncoder {
    pub fn fit(data: &Dataset) -> Result<Self> {
        if data.features().is_empty() {
            return Err(Error::Usage("no features to train on".into()));
        }
        let features = data
            .features()
            .iter()
            .map(|f| match &f.data {
                Column::Numeric(v) => {
                    let mut present: Vec<f64> = v.iter().flatten().copied().collect();
                    let med = median(&mut present);
                    let n = v.len().max(1) as f64;
                    let imputed = || v.iter().map(|x| x.unwrap_or(med));
                    let mean = imputed().sum::<f64>() / n;
                    let var = imputed().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
                    let std = if var > 0.0 { var.sqrt() } else { 1.0 };
                    EncodedFeature::Numeric {
                        name: f.name.clone(),
                        median: med,
                        mean,
                        std,
                    }
                }
                Column::Categorical(v) => {
                    let set: std::collections::BTreeSet<&str> = v
                        .iter()
                        .map(|c| c.as_deref().unwrap_or(MISSING_CATEGORY))
                        .collect();
                    EncodedFeature::Categorical {
                        name: f.name.clone(),
                        categories: set.into_iter().map(str::to_string).collect(),
                    }
                }
            })
            .collect();
        Ok(FeatureEncoder { features })
    }

    pub fn width(&self) -> usize {
        self.features.iter().map(EncodedFeature::width).sum()
    }

    pub fn feature_names(&self) -> impl Iterator<Item = &str> {
        self.features.iter().map(EncodedFeature::name)
    }

    /// Source feature index of every encoded column.
    pub fn column_sources(&self) -> Vec<usize> {
        self.features
            .iter()
            .enumerate()
            .flat_map(|(k, f)| std::iter::repeat_n(k, f.width()))
            .collect()
    }

    /// Encodes `data`, which must carry every training feature with the same
    /// kind; extra columns are ignored.
    pub fn transform(&self, data: &Dataset) -> Result<Matrix> {
        let missing: Vec<String> = self
            .features
            .iter()
            .filter(|f| data.column(f.name()).is_none())
            .map(|f| f.name().to_string())
            .collect();
        if !missing.is_empty() {
            return Err(Error::SchemaMismatch(format!(
                "dataset lacks training feature(s): {}",
                missing.join(", ")
            )));
        }
        let mut m = Matrix::zeros(data.len(), self.width());
        let mut offset = 0;
        for f in &self.features {
            let col = data.column(f.name()).expect("checked above");
            if col.kind() != f.kind() {
                return Err(Error::SchemaMismatch(format!(
                    "feature '{}' was {:?} at training time but is {:?}",
                    f.name(),
                    f.kind(),
                    col.kind()
                )));
            }
            match (f, col) {
                (
                    EncodedFeature::Numeric {
                        median, mean, std, ..
                    },
                    Column::Numeric(v),
                ) => {
                    for (i, x) in v.iter().enumerate() {
                        m.data[i * m.cols + offset] = (x.unwrap_or(*median) - mean) / std;
                    }
                }
                (EncodedFeature::Categorical { categories, name }, Column::Categorical(v)) => {
                    let mut unseen = 0usize;
                    for (i, c) in v.iter().enumerate() {
                        let c = c.as_deref().unwrap_or(MISSING_CATEGORY);
                        match categories.binary_search_by(|k| k.as_str().cmp(c)) {
                            Ok(j) => m.data[i * m.cols + offset + j] = 1.0,
                            Err(_) => unseen += 1,
                        }
                    }
                    if unseen > 0 {
                        log::warn!(
                            "feature '{name}': {unseen} row(s) with categories unseen in training encoded as all zeros"
                        );
                    }
                }
                _ => unreachable!("kinds checked above"),
            }
            offset += f.width();
        }
        Ok(m)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{ColumnSpec, FeatureColumn, Schema};

    fn data(x: Vec<Option<f64>>, c: Vec<Option<&str>>) -> Dataset {
        let n = x.len();
        Dataset::new(
            Schema {
                columns: vec![
                    ColumnSpec::numeric("x"),
                    ColumnSpec::categorical("c"),
                    ColumnSpec::categorical("y"),
                ],
                target: "y".into(),
                positive_label: "1".into(),
                protected: vec![],
                missing_token: String::new(),
                dropped: vec![],
            },
            vec![
                FeatureColumn {
                    name: "x".into(),
                    data: Column::Numeric(x),
                },
                FeatureColumn {
                    name: "c".into(),
                    data: Column::Categorical(c.into_iter().map(|s| s.map(str::to_string)).collect()),
                },
            ],
            (0..n).map(|i| (i % 2) as u8).collect(),
        )
        .unwrap()
    }

    #[test]
    fn one_hot_and_standardise() {
        let d = data(
            vec![Some(1.0), Some(3.0), None, Some(5.0)],
            vec![Some("a"), Some("b"), Some("a"), None],
        );
        let enc = FeatureEncoder::fit(&d).unwrap();
        // x, then (missing), a, b
        assert_eq!(enc.width(), 4);
        assert_eq!(enc.column_sources(), vec![0, 1, 1, 1]);
        let m = enc.transform(&d).unwrap();
        // missing x imputed by the median 3 -> values 1,3,3,5 with mean 3
        assert_eq!(m.get(2, 0), 0.0);
        assert_eq!(m.row(0)[1..].to_vec(), vec![0.0, 1.0, 0.0]);
        assert_eq!(m.row(3)[1..].to_vec(), vec![1.0, 0.0, 0.0]);
        let col: Vec<f64> = (0..4).map(|i| m.get(i, 0)).collect();
        let mean = col.iter().sum::<f64>() / 4.0;
        let var = col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / 4.0;
        assert!(mean.abs() < 1e-12 && (var - 1.0).abs() < 1e-12);
    }

    #[test]
    fn unseen_category_encodes_as_zeros() {
        let train = data(vec![Some(1.0), Some(2.0)], vec![Some("a"), Some("b")]);
        let enc = FeatureEncoder::fit(&train).unwrap();
        let test = data(vec![Some(1.0)], vec![Some("z")]);
        let m = enc.transform(&test).unwrap();
        assert!(m.row(0)[1..].iter().all(|&v| v == 0.0));
    }

    #[test]
    fn missing_feature_is_named() {
        let train = data(vec![Some(1.0), Some(2.0)], vec![Some("a"), Some("b")]);
        let enc = FeatureEncoder::fit(&train).unwrap();
        let ablated = crate::dataset::ablate(&train, &["c"]).unwrap();
        match enc.transform(&ablated) {
            Err(Error::SchemaMismatch(msg)) => assert!(msg.contains("'c'") || msg.contains("c")),
            other => panic!("unexpected {other:?}"),
        }
    }
}
