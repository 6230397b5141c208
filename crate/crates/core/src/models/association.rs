use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::ImportanceRanking;
use crate::dataset::{partition_observed, BinningSpec, Column, Dataset};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AssociationKind {
    CramersV,
    CorrelationRatio,
}

/// Strength of association between a feature and a protected feature's
/// groups, in `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssociationScore {
    pub feature: String,
    pub protected: String,
    pub kind: AssociationKind,
    pub value: f64,
    /// Set when the statistic degenerates (constant feature, single group)
    /// and `value` is reported as 0.
    pub degenerate: bool,
}

/// Cramér's V for a categorical feature, the correlation ratio (eta) for a
/// numeric one. Rows where the feature is missing are left out of the
/// numeric statistic; a missing category counts as its own level.
pub fn association(
    dataset: &Dataset,
    feature: &str,
    protected: &str,
    binning: Option<&BinningSpec>,
) -> Result<AssociationScore> {
    let groups = partition_observed(dataset, protected, binning)?;
    let group_of = groups.assignment(dataset.len());
    let column = dataset
        .column(feature)
        .ok_or_else(|| Error::MissingColumns(vec![feature.to_string()]))?;
    let (kind, value) = match column {
        Column::Categorical(values) => (
            AssociationKind::CramersV,
            cramers_v(values.iter().map(|v| v.as_deref()), &group_of, groups.len()),
        ),
        Column::Numeric(values) => (
            AssociationKind::CorrelationRatio,
            correlation_ratio(values, &group_of, groups.len()),
        ),
    };
    let degenerate = value.is_none();
    if degenerate {
        log::warn!("association of '{feature}' with '{protected}' is degenerate; reporting 0");
    }
    Ok(AssociationScore {
        feature: feature.to_string(),
        protected: protected.to_string(),
        kind,
        value: value.unwrap_or(0.0).clamp(0.0, 1.0),
        degenerate,
    })
}

fn cramers_v<'a>(
    values: impl Iterator<Item = Option<&'a str>>,
    group_of: &[usize],
    groups: usize,
) -> Option<f64> {
    let mut levels: BTreeMap<Option<&str>, usize> = BTreeMap::new();
    let mut cells: Vec<(usize, usize)> = Vec::new();
    for (v, &g) in values.zip(group_of) {
        let next = levels.len();
        let level = *levels.entry(v).or_insert(next);
        cells.push((level, g));
    }
    let r = levels.len();
    let n = cells.len() as f64;
    if r < 2 || groups < 2 {
        return None;
    }
    let mut table = vec![0.0; r * groups];
    for (l, g) in cells {
        table[l * groups + g] += 1.0;
    }
    let row_tot: Vec<f64> = (0..r)
        .map(|l| table[l * groups..(l + 1) * groups].iter().sum())
        .collect();
    let col_tot: Vec<f64> = (0..groups)
        .map(|g| (0..r).map(|l| table[l * groups + g]).sum())
        .collect();
    let mut chi2 = 0.0;
    for l in 0..r {
        for g in 0..groups {
            let expected = row_tot[l] * col_tot[g] / n;
            if expected > 0.0 {
                chi2 += (table[l * groups + g] - expected).powi(2) / expected;
            }
        }
    }
    let k = (r.min(groups) - 1) as f64;
    Some((chi2 / (n * k)).sqrt())
}

fn correlation_ratio(values: &[Option<f64>], group_of: &[usize], groups: usize) -> Option<f64> {
    let mut sum = vec![0.0; groups];
    let mut count = vec![0.0; groups];
    let mut present = Vec::new();
    for (v, &g) in values.iter().zip(group_of) {
        if let Some(x) = v {
            sum[g] += x;
            count[g] += 1.0;
            present.push(*x);
        }
    }
    let n = present.len() as f64;
    if n == 0.0 {
        return None;
    }
    let mean = present.iter().sum::<f64>() / n;
    let total: f64 = present.iter().map(|x| (x - mean).powi(2)).sum();
    if total <= 0.0 {
        return None;
    }
    let between: f64 = (0..groups)
        .filter(|&g| count[g] > 0.0)
        .map(|g| count[g] * (sum[g] / count[g] - mean).powi(2))
        .sum();
    Some((between / total).sqrt())
}

/// The `k` most important features, keeping those whose association with the
/// protected feature is at least `tau`, in importance order. A feature with
/// no association score counts as association 0.
pub fn select_proxies(
    ranking: &ImportanceRanking,
    associations: &[AssociationScore],
    k: usize,
    tau: f64,
) -> Vec<String> {
    ranking
        .names()
        .take(k)
        .filter(|name| {
            let a = associations
                .iter()
                .find(|s| s.feature == *name)
                .map_or(0.0, |s| s.value);
            a >= tau
        })
        .map(str::to_string)
        .collect()
}
