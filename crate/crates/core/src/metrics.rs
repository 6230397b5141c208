//! Threshold and ranking metrics for binary scores.
//!
//! The decision rule everywhere is `score >= threshold` (ties predict
//! positive). Candidate thresholds are the midpoints between consecutive
//! distinct scores plus one sentinel below the smallest and one above the
//! largest score; between two consecutive scores the confusion matrix is
//! constant, so nothing is lost by evaluating only those candidates.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Model scores aligned with ground-truth labels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreSet {
    scores: Vec<f64>,
    labels: Vec<u8>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    rows: Option<Vec<usize>>,
}

impl ScoreSet {
    pub fn new(scores: Vec<f64>, labels: Vec<u8>) -> Result<Self> {
        if scores.len() != labels.len() {
            return Err(Error::Usage(format!(
                "{} scores for {} labels",
                scores.len(),
                labels.len()
            )));
        }
        if let Some(s) = scores.iter().find(|s| !(0.0..=1.0).contains(*s)) {
            return Err(Error::Usage(format!("score {s} outside [0, 1]")));
        }
        if labels.iter().any(|&y| y > 1) {
            return Err(Error::Usage("labels must be 0 or 1".into()));
        }
        Ok(ScoreSet {
            scores,
            labels,
            rows: None,
        })
    }

    /// Attaches the dataset row index of every score.
    pub fn with_rows(mut self, rows: Vec<usize>) -> Result<Self> {
        if rows.len() != self.scores.len() {
            return Err(Error::Usage("row alignment length mismatch".into()));
        }
        self.rows = Some(rows);
        Ok(self)
    }

    pub fn scores(&self) -> &[f64] {
        &self.scores
    }

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    pub fn rows(&self) -> Option<&[usize]> {
        self.rows.as_deref()
    }

    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }

    pub fn positives(&self) -> usize {
        self.labels.iter().filter(|&&y| y == 1).count()
    }

    pub fn negatives(&self) -> usize {
        self.len() - self.positives()
    }

    pub fn has_both_classes(&self) -> bool {
        let p = self.positives();
        p > 0 && p < self.len()
    }

    pub fn subset(&self, idx: &[usize]) -> ScoreSet {
        ScoreSet {
            scores: idx.iter().map(|&i| self.scores[i]).collect(),
            labels: idx.iter().map(|&i| self.labels[i]).collect(),
            rows: self
                .rows
                .as_ref()
                .map(|r| idx.iter().map(|&i| r[i]).collect()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
}

impl ConfusionMatrix {
    pub fn total(&self) -> usize {
        self.tp + self.fp + self.tn + self.fn_
    }
}

pub fn confusion(scores: &ScoreSet, threshold: f64) -> ConfusionMatrix {
    let mut cm = ConfusionMatrix::default();
    for (&s, &y) in scores.scores.iter().zip(&scores.labels) {
        match (s >= threshold, y == 1) {
            (true, true) => cm.tp += 1,
            (true, false) => cm.fp += 1,
            (false, false) => cm.tn += 1,
            (false, true) => cm.fn_ += 1,
        }
    }
    cm
}

/// A metric value, or the explicit `undefined` marker (serialised as `null`).
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct MetricValue(Option<f64>);

impl MetricValue {
    pub fn defined(v: f64) -> Self {
        MetricValue(Some(v))
    }

    pub fn undefined() -> Self {
        MetricValue(None)
    }

    pub fn get(self) -> Option<f64> {
        self.0
    }

    pub fn is_defined(self) -> bool {
        self.0.is_some()
    }

    /// The value shown in reports: undefined reads as 0.
    pub fn reported(self) -> f64 {
        self.0.unwrap_or(0.0)
    }
}

impl From<Option<f64>> for MetricValue {
    fn from(v: Option<f64>) -> Self {
        MetricValue(v)
    }
}

impl fmt::Display for MetricValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.0 {
            Some(v) => write!(f, "{v}"),
            None => f.write_str("undefined"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Degeneracy {
    /// No predicted positives.
    PrecisionUndefined,
    /// No actual positives.
    RecallUndefined,
    /// No actual negatives.
    SpecificityUndefined,
    F1Undefined,
    /// Only one class present.
    AucUndefined,
    EmptyScoreSet,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    Auc,
    Precision,
    Recall,
    F1,
    Brier,
}

impl Metric {
    pub const ALL: [Metric; 5] = [
        Metric::Auc,
        Metric::Precision,
        Metric::Recall,
        Metric::F1,
        Metric::Brier,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Metric::Auc => "auc",
            Metric::Precision => "precision",
            Metric::Recall => "recall",
            Metric::F1 => "f1",
            Metric::Brier => "brier",
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Metric::ALL
            .into_iter()
            .find(|m| m.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::Usage(format!("unknown metric '{s}'")))
    }
}

/// Threshold-dependent metrics from a confusion matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointMetrics {
    pub precision: MetricValue,
    pub recall: MetricValue,
    pub specificity: MetricValue,
    pub f1: MetricValue,
    pub flags: BTreeSet<Degeneracy>,
}

impl PointMetrics {
    pub fn sensitivity(&self) -> MetricValue {
        self.recall
    }
}

fn ratio(num: usize, den: usize) -> Option<f64> {
    (den > 0).then(|| num as f64 / den as f64)
}

pub fn point_metrics(cm: &ConfusionMatrix) -> PointMetrics {
    let mut flags = BTreeSet::new();
    let precision = ratio(cm.tp, cm.tp + cm.fp);
    let recall = ratio(cm.tp, cm.tp + cm.fn_);
    let specificity = ratio(cm.tn, cm.tn + cm.fp);
    if precision.is_none() {
        flags.insert(Degeneracy::PrecisionUndefined);
    }
    if recall.is_none() {
        flags.insert(Degeneracy::RecallUndefined);
    }
    if specificity.is_none() {
        flags.insert(Degeneracy::SpecificityUndefined);
    }
    let f1 = match (precision, recall) {
        (Some(p), Some(r)) if p + r > 0.0 => Some(2.0 * p * r / (p + r)),
        (Some(_), Some(_)) => Some(0.0),
        _ => {
            flags.insert(Degeneracy::F1Undefined);
            None
        }
    };
    PointMetrics {
        precision: precision.into(),
        recall: recall.into(),
        specificity: specificity.into(),
        f1: f1.into(),
        flags,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RocPoint {
    pub fpr: f64,
    pub tpr: f64,
    pub threshold: f64,
}

/// ROC points from the above-max sentinel `(0, 0)` down to the below-min
/// sentinel `(1, 1)`. Empty when the score set lacks one of the classes.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct RocCurve {
    pub points: Vec<RocPoint>,
}

/// Distinct scores in ascending order with the (positive, negative) counts
/// at each.
fn score_levels(scores: &ScoreSet) -> Vec<(f64, usize, usize)> {
    let mut pairs: Vec<(f64, u8)> = scores
        .scores
        .iter()
        .copied()
        .zip(scores.labels.iter().copied())
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut levels: Vec<(f64, usize, usize)> = Vec::new();
    for (s, y) in pairs {
        match levels.last_mut() {
            Some(last) if last.0 == s => {
                if y == 1 {
                    last.1 += 1
                } else {
                    last.2 += 1
                }
            }
            _ => levels.push((s, usize::from(y == 1), usize::from(y == 0))),
        }
    }
    levels
}

/// A threshold strictly below `min` (0 whenever `min > 0`).
pub fn below_sentinel(min: f64) -> f64 {
    if min > 0.0 {
        0.0
    } else {
        min - 1e-12
    }
}

/// A threshold strictly above `max` (1 whenever `max < 1`).
pub fn above_sentinel(max: f64) -> f64 {
    if max < 1.0 {
        1.0
    } else {
        max + 1e-12
    }
}

/// Candidate thresholds in ascending order: the below-min sentinel, the
/// midpoints between consecutive distinct scores, the above-max sentinel.
pub fn candidate_thresholds(scores: &ScoreSet) -> Vec<f64> {
    let levels = score_levels(scores);
    thresholds_from_levels(&levels)
}

fn thresholds_from_levels(levels: &[(f64, usize, usize)]) -> Vec<f64> {
    let (Some(first), Some(last)) = (levels.first(), levels.last()) else {
        return Vec::new();
    };
    let mut out = Vec::with_capacity(levels.len() + 1);
    out.push(below_sentinel(first.0));
    out.extend(levels.windows(2).map(|w| (w[0].0 + w[1].0) / 2.0));
    out.push(above_sentinel(last.0));
    out
}

/// ROC curve and AUC. The AUC is the Mann-Whitney statistic: the share of
/// (positive, negative) pairs ranked correctly, ties counting one half.
pub fn roc_and_auc(scores: &ScoreSet) -> (RocCurve, MetricValue) {
    if !scores.has_both_classes() {
        return (RocCurve::default(), MetricValue::undefined());
    }
    let levels = score_levels(scores);
    let thresholds = thresholds_from_levels(&levels);
    let p = scores.positives() as f64;
    let n = scores.negatives() as f64;

    // Sweep from the highest level down; `twice_area` counts pairs in halves
    // so the sum stays exact in integer arithmetic.
    let mut points = Vec::with_capacity(thresholds.len());
    points.push(RocPoint {
        fpr: 0.0,
        tpr: 0.0,
        threshold: *thresholds.last().unwrap(),
    });
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut twice_area: u128 = 0;
    for (k, &(_, pos, neg)) in levels.iter().enumerate().rev() {
        twice_area += (neg as u128) * (2 * tp as u128 + pos as u128);
        tp += pos;
        fp += neg;
        points.push(RocPoint {
            fpr: fp as f64 / n,
            tpr: tp as f64 / p,
            threshold: thresholds[k],
        });
    }
    let auc = twice_area as f64 / (2.0 * p * n);
    (RocCurve { points }, MetricValue::defined(auc))
}

pub fn auc(scores: &ScoreSet) -> MetricValue {
    roc_and_auc(scores).1
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct YoudenPoint {
    pub threshold: f64,
    pub j: f64,
}

/// Youden's J from a confusion matrix: sensitivity + specificity - 1.
pub fn youden_j(cm: &ConfusionMatrix) -> f64 {
    let sensitivity = cm.tp as f64 / (cm.tp + cm.fn_) as f64;
    let specificity = cm.tn as f64 / (cm.tn + cm.fp) as f64;
    sensitivity + specificity - 1.0
}

/// The candidate threshold maximising Youden's J; ties go to the lowest
/// threshold.
pub fn youden_threshold(scores: &ScoreSet) -> Result<YoudenPoint> {
    if !scores.has_both_classes() {
        return Err(Error::SingleClass(
            "Youden threshold needs both classes".into(),
        ));
    }
    let levels = score_levels(scores);
    let thresholds = thresholds_from_levels(&levels);
    let mut cm = ConfusionMatrix {
        tp: scores.positives(),
        fp: scores.negatives(),
        tn: 0,
        fn_: 0,
    };
    // J * P * N + P * N = tp * N + tn * P, compared exactly so that equal
    // J values tie regardless of rounding
    let (p, n) = (scores.positives() as u128, scores.negatives() as u128);
    let key = |cm: &ConfusionMatrix| cm.tp as u128 * n + cm.tn as u128 * p;
    let mut best = (key(&cm), 0, cm);
    // moving past level k turns its rows negative
    for (k, &(_, pos, neg)) in levels.iter().enumerate() {
        cm.tp -= pos;
        cm.fn_ += pos;
        cm.fp -= neg;
        cm.tn += neg;
        if key(&cm) > best.0 {
            best = (key(&cm), k + 1, cm);
        }
    }
    Ok(YoudenPoint {
        threshold: thresholds[best.1],
        j: youden_j(&best.2),
    })
}

pub fn brier(scores: &ScoreSet) -> MetricValue {
    if scores.is_empty() {
        return MetricValue::undefined();
    }
    let sum: f64 = scores
        .scores
        .iter()
        .zip(&scores.labels)
        .map(|(&s, &y)| (s - f64::from(y)).powi(2))
        .sum();
    MetricValue::defined(sum / scores.len() as f64)
}

/// Sample variance (divisor n - 1) over the defined values. Fewer than two
/// defined values give `undefined`.
pub fn group_variance(values: &[MetricValue]) -> MetricValue {
    let defined: Vec<f64> = values.iter().filter_map(|v| v.get()).collect();
    match defined.as_slice() {
        [] | [_] => MetricValue::undefined(),
        [a, b] => MetricValue::defined((a - b) * (a - b) / 2.0),
        xs => {
            let n = xs.len() as f64;
            let mean = xs.iter().sum::<f64>() / n;
            let ss: f64 = xs.iter().map(|x| (x - mean).powi(2)).sum();
            MetricValue::defined(ss / (n - 1.0))
        }
    }
}

/// AUC, Brier score and the point metrics at one threshold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricVector {
    pub auc: MetricValue,
    pub precision: MetricValue,
    pub recall: MetricValue,
    pub specificity: MetricValue,
    pub f1: MetricValue,
    pub brier: MetricValue,
    pub confusion: ConfusionMatrix,
    #[serde(default, skip_serializing_if = "BTreeSet::is_empty")]
    pub flags: BTreeSet<Degeneracy>,
}

impl MetricVector {
    pub fn get(&self, metric: Metric) -> MetricValue {
        match metric {
            Metric::Auc => self.auc,
            Metric::Precision => self.precision,
            Metric::Recall => self.recall,
            Metric::F1 => self.f1,
            Metric::Brier => self.brier,
        }
    }
}

pub fn evaluate(scores: &ScoreSet, threshold: f64) -> MetricVector {
    let cm = confusion(scores, threshold);
    let point = point_metrics(&cm);
    let auc = auc(scores);
    let brier = brier(scores);
    let mut flags = point.flags;
    if !auc.is_defined() {
        flags.insert(Degeneracy::AucUndefined);
    }
    if scores.is_empty() {
        flags.insert(Degeneracy::EmptyScoreSet);
    }
    MetricVector {
        auc,
        precision: point.precision,
        recall: point.recall,
        specificity: point.specificity,
        f1: point.f1,
        brier,
        confusion: cm,
        flags,
    }
}
