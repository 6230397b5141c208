//! Candidate thresholds, performance boundaries, the variance-minimising
//! fairness threshold and the pairwise parity check.
//!
//! A single decision threshold is shared by every group. Candidates are the
//! Youden-optimal threshold of the whole score set, the Youden-optimal
//! threshold of each group, and the min / max / mean / median of the group
//! thresholds. The fairness threshold is the candidate whose metric varies
//! least across groups.
//!
//! Two variance conventions exist. `GroupsOnly` takes the sample variance of
//! the per-group values, which is what published result tables report.
//! `IncludeOverall` adds the whole-population value to that sample, as the
//! textbook statement of the criterion does. Both are available so the
//! difference stays visible.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::dataset::GroupPartition;
use crate::error::{Error, Result};
use crate::metrics::{
    evaluate, group_variance, youden_threshold, Metric, MetricValue, MetricVector, ScoreSet,
    YoudenPoint,
};

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub enum CandidateId {
    Overall,
    Group(String),
    Min,
    Max,
    Mean,
    Median,
}

impl fmt::Display for CandidateId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CandidateId::Overall => f.write_str("overall"),
            CandidateId::Group(g) => write!(f, "group:{g}"),
            CandidateId::Min => f.write_str("min"),
            CandidateId::Max => f.write_str("max"),
            CandidateId::Mean => f.write_str("mean"),
            CandidateId::Median => f.write_str("median"),
        }
    }
}

impl FromStr for CandidateId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "overall" => CandidateId::Overall,
            "min" => CandidateId::Min,
            "max" => CandidateId::Max,
            "mean" => CandidateId::Mean,
            "median" => CandidateId::Median,
            _ => match s.strip_prefix("group:") {
                Some(g) => CandidateId::Group(g.to_string()),
                None => return Err(Error::Usage(format!("unknown candidate id '{s}'"))),
            },
        })
    }
}

impl From<CandidateId> for String {
    fn from(c: CandidateId) -> String {
        c.to_string()
    }
}

impl TryFrom<String> for CandidateId {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VarianceMode {
    #[default]
    GroupsOnly,
    IncludeOverall,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupThreshold {
    pub group: String,
    /// `None` when the group holds a single class.
    pub optimum: Option<YoudenPoint>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Aggregates {
    pub min: f64,
    pub max: f64,
    pub mean: f64,
    pub median: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdCandidates {
    pub overall: YoudenPoint,
    pub per_group: Vec<GroupThreshold>,
    /// Over the defined group thresholds; `None` if there are none.
    pub aggregates: Option<Aggregates>,
}

impl ThresholdCandidates {
    /// Every defined candidate with its threshold, in canonical order.
    pub fn list(&self) -> Vec<(CandidateId, f64)> {
        let mut out = vec![(CandidateId::Overall, self.overall.threshold)];
        out.extend(self.per_group.iter().filter_map(|g| {
            g.optimum
                .map(|o| (CandidateId::Group(g.group.clone()), o.threshold))
        }));
        if let Some(a) = self.aggregates {
            out.extend([
                (CandidateId::Min, a.min),
                (CandidateId::Max, a.max),
                (CandidateId::Mean, a.mean),
                (CandidateId::Median, a.median),
            ]);
        }
        out
    }
}

fn check_alignment(scores: &ScoreSet, partition: &GroupPartition) -> Result<()> {
    if partition.covers(scores.len()) {
        Ok(())
    } else {
        Err(Error::Usage(format!(
            "partition on '{}' does not cover the {} scored rows",
            partition.feature,
            scores.len()
        )))
    }
}

fn median(sorted: &[f64]) -> f64 {
    let m = sorted.len() / 2;
    if sorted.len() % 2 == 1 {
        sorted[m]
    } else {
        (sorted[m - 1] + sorted[m]) / 2.0
    }
}

pub fn candidates(scores: &ScoreSet, partition: &GroupPartition) -> Result<ThresholdCandidates> {
    check_alignment(scores, partition)?;
    let overall = youden_threshold(scores)?;
    let per_group: Vec<GroupThreshold> = partition
        .groups
        .iter()
        .map(|g| {
            let sub = scores.subset(&g.rows);
            let optimum = youden_threshold(&sub).ok();
            if optimum.is_none() {
                log::warn!(
                    "group '{}' of '{}' holds a single class; its threshold is undefined",
                    g.label,
                    partition.feature
                );
            }
            GroupThreshold {
                group: g.label.clone(),
                optimum,
            }
        })
        .collect();
    let mut defined: Vec<f64> = per_group
        .iter()
        .filter_map(|g| g.optimum.map(|o| o.threshold))
        .collect();
    defined.sort_by(f64::total_cmp);
    let aggregates = (!defined.is_empty()).then(|| Aggregates {
        min: defined[0],
        max: defined[defined.len() - 1],
        mean: defined.iter().sum::<f64>() / defined.len() as f64,
        median: median(&defined),
    });
    Ok(ThresholdCandidates {
        overall,
        per_group,
        aggregates,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupMetrics {
    pub group: String,
    pub metrics: MetricVector,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundaryRow {
    pub candidate: CandidateId,
    pub threshold: f64,
    pub overall: MetricVector,
    pub per_group: Vec<GroupMetrics>,
    /// Groups-only sample variance per requested metric.
    pub variance: BTreeMap<Metric, MetricValue>,
}

impl BoundaryRow {
    pub fn group_values(&self, metric: Metric) -> Vec<MetricValue> {
        self.per_group.iter().map(|g| g.metrics.get(metric)).collect()
    }

    pub fn variance_for(&self, metric: Metric, mode: VarianceMode) -> MetricValue {
        let mut values = self.group_values(metric);
        if mode == VarianceMode::IncludeOverall {
            values.push(self.overall.get(metric));
        }
        group_variance(&values)
    }

    /// True when some group's value was undefined and left out of the
    /// variance.
    pub fn has_undefined(&self, metric: Metric) -> bool {
        self.group_values(metric).iter().any(|v| !v.is_defined())
    }
}

/// Metrics overall and per group at every candidate threshold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundaryTable {
    pub feature: String,
    pub metrics: Vec<Metric>,
    pub groups: Vec<String>,
    pub candidates: ThresholdCandidates,
    pub rows: Vec<BoundaryRow>,
}

impl BoundaryTable {
    pub fn row(&self, candidate: &CandidateId) -> Option<&BoundaryRow> {
        self.rows.iter().find(|r| &r.candidate == candidate)
    }
}

pub fn boundary(
    scores: &ScoreSet,
    partition: &GroupPartition,
    metrics: &[Metric],
) -> Result<BoundaryTable> {
    let cands = candidates(scores, partition)?;
    let subsets: Vec<(String, ScoreSet)> = partition
        .groups
        .iter()
        .map(|g| (g.label.clone(), scores.subset(&g.rows)))
        .collect();
    let rows = cands
        .list()
        .into_iter()
        .map(|(candidate, threshold)| {
            let per_group: Vec<GroupMetrics> = subsets
                .iter()
                .map(|(g, s)| GroupMetrics {
                    group: g.clone(),
                    metrics: evaluate(s, threshold),
                })
                .collect();
            let variance = metrics
                .iter()
                .map(|&m| {
                    let values: Vec<MetricValue> =
                        per_group.iter().map(|g| g.metrics.get(m)).collect();
                    (m, group_variance(&values))
                })
                .collect();
            BoundaryRow {
                candidate,
                threshold,
                overall: evaluate(scores, threshold),
                per_group,
                variance,
            }
        })
        .collect();
    Ok(BoundaryTable {
        feature: partition.feature.clone(),
        metrics: metrics.to_vec(),
        groups: partition.groups.iter().map(|g| g.label.clone()).collect(),
        candidates: cands,
        rows,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateVariance {
    pub candidate: CandidateId,
    pub threshold: f64,
    pub variance: MetricValue,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FairnessChoice {
    pub selected: CandidateId,
    pub threshold: f64,
    pub metric: Metric,
    pub variance: f64,
    pub mode: VarianceMode,
    pub per_candidate: Vec<CandidateVariance>,
}

/// Tie-break rank: `overall` first, then `mean`, then everything else.
fn preference(c: &CandidateId) -> u8 {
    match c {
        CandidateId::Overall => 0,
        CandidateId::Mean => 1,
        _ => 2,
    }
}

/// Among candidates sharing a threshold, an aggregate names it before the
/// group it coincides with.
fn alias_rank(c: &CandidateId) -> u8 {
    match c {
        CandidateId::Min => 0,
        CandidateId::Max => 1,
        CandidateId::Median => 2,
        _ => 3,
    }
}

/// The candidate with the smallest group variance of `metric`. Exact ties go
/// to `overall`, then `mean`, then the lowest threshold; an aggregate beats
/// the group candidate whose threshold it repeats.
pub fn fairness_threshold(
    table: &BoundaryTable,
    metric: Metric,
    mode: VarianceMode,
) -> Result<FairnessChoice> {
    let per_candidate: Vec<CandidateVariance> = table
        .rows
        .iter()
        .map(|r| CandidateVariance {
            candidate: r.candidate.clone(),
            threshold: r.threshold,
            variance: r.variance_for(metric, mode),
        })
        .collect();
    let best = per_candidate
        .iter()
        .filter_map(|c| c.variance.get().map(|v| (c, v)))
        .min_by(|(a, va), (b, vb)| {
            va.total_cmp(vb)
                .then_with(|| preference(&a.candidate).cmp(&preference(&b.candidate)))
                .then_with(|| a.threshold.total_cmp(&b.threshold))
                .then_with(|| alias_rank(&a.candidate).cmp(&alias_rank(&b.candidate)))
        })
        .map(|(c, v)| (c.candidate.clone(), c.threshold, v));
    let Some((selected, threshold, variance)) = best else {
        return Err(Error::NoDefinedVariance(metric.to_string()));
    };
    Ok(FairnessChoice {
        selected,
        threshold,
        metric,
        variance,
        mode,
        per_candidate,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairResult {
    pub a: String,
    pub b: String,
    pub difference: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParityVerdict {
    pub metric: Metric,
    pub xi: f64,
    pub pairs: Vec<PairResult>,
    pub pass: bool,
    /// Fewer than two groups had a defined value, so nothing was compared.
    pub vacuous: bool,
    /// Groups left out because their metric is undefined.
    pub excluded: Vec<String>,
}

/// Compares every unordered pair of groups: parity holds when each absolute
/// difference is strictly below `xi`.
pub fn parity_check(metric: Metric, per_group: &[(String, MetricValue)], xi: f64) -> ParityVerdict {
    let defined: Vec<(&str, f64)> = per_group
        .iter()
        .filter_map(|(g, v)| v.get().map(|x| (g.as_str(), x)))
        .collect();
    let excluded = per_group
        .iter()
        .filter(|(_, v)| !v.is_defined())
        .map(|(g, _)| g.clone())
        .collect();
    let mut pairs = Vec::new();
    for (i, &(a, va)) in defined.iter().enumerate() {
        for &(b, vb) in &defined[i + 1..] {
            let difference = (va - vb).abs();
            pairs.push(PairResult {
                a: a.to_string(),
                b: b.to_string(),
                difference,
                pass: difference < xi,
            });
        }
    }
    let vacuous = defined.len() < 2;
    ParityVerdict {
        metric,
        xi,
        pass: pairs.iter().all(|p| p.pass),
        pairs,
        vacuous,
        excluded,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::Group;
    use crate::metrics::confusion;
    use proptest::prelude::*;

    fn partition_of(assign: &[usize], names: &[&str]) -> GroupPartition {
        GroupPartition {
            feature: "g".into(),
            groups: names
                .iter()
                .enumerate()
                .map(|(k, n)| Group {
                    label: n.to_string(),
                    rows: (0..assign.len()).filter(|&i| assign[i] == k).collect(),
                })
                .collect(),
        }
    }

    fn ss(scores: &[f64], labels: &[u8]) -> ScoreSet {
        ScoreSet::new(scores.to_vec(), labels.to_vec()).unwrap()
    }

    #[test]
    fn aggregates_are_forced_arithmetic() {
        // male rows 0..4 optimal at 0.4, female rows 4..8 optimal at 0.6
        let scores = [0.1, 0.3, 0.5, 0.7, 0.3, 0.5, 0.7, 0.9];
        let labels = [0, 0, 1, 1, 0, 0, 1, 1];
        let p = partition_of(&[0, 0, 0, 0, 1, 1, 1, 1], &["male", "female"]);
        let c = candidates(&ss(&scores, &labels), &p).unwrap();
        let t: Vec<f64> = c.per_group.iter().map(|g| g.optimum.unwrap().threshold).collect();
        assert!((t[0] - 0.4).abs() < 1e-12 && (t[1] - 0.6).abs() < 1e-12);
        let a = c.aggregates.unwrap();
        assert!((a.min - 0.4).abs() < 1e-12);
        assert!((a.max - 0.6).abs() < 1e-12);
        assert!((a.mean - 0.5).abs() < 1e-12);
        assert!((a.median - 0.5).abs() < 1e-12);
    }

    #[test]
    fn single_class_group_is_undefined() {
        let scores = [0.1, 0.9, 0.2, 0.8, 0.3, 0.4];
        let labels = [0, 1, 0, 1, 1, 1];
        let p = partition_of(&[0, 0, 0, 0, 1, 1], &["a", "b"]);
        let c = candidates(&ss(&scores, &labels), &p).unwrap();
        assert!(c.per_group[1].optimum.is_none());
        let a = c.aggregates.unwrap();
        let ta = c.per_group[0].optimum.unwrap().threshold;
        assert_eq!((a.min, a.max, a.mean, a.median), (ta, ta, ta, ta));
        assert!(!c.list().iter().any(|(id, _)| *id == CandidateId::Group("b".into())));
    }

    #[test]
    fn single_class_overall_is_an_error() {
        let p = partition_of(&[0, 1], &["a", "b"]);
        assert!(candidates(&ss(&[0.2, 0.4], &[1, 1]), &p).is_err());
    }

    #[test]
    fn copied_groups_give_equal_candidates_and_zero_variance() {
        let base = [0.1, 0.35, 0.4, 0.62, 0.7, 0.9];
        let lab = [0, 1, 0, 0, 1, 1];
        let scores: Vec<f64> = base.iter().chain(&base).copied().collect();
        let labels: Vec<u8> = lab.iter().chain(&lab).copied().collect();
        let p = partition_of(&[0, 0, 0, 0, 0, 0, 1, 1, 1, 1, 1, 1], &["a", "b"]);
        let s = ss(&scores, &labels);
        let c = candidates(&s, &p).unwrap();
        let thresholds: Vec<f64> = c.list().iter().map(|x| x.1).collect();
        assert!(thresholds.iter().all(|&t| t == thresholds[0]));
        let table = boundary(&s, &p, &Metric::ALL).unwrap();
        for row in &table.rows {
            for m in Metric::ALL {
                assert_eq!(row.variance[&m].get(), Some(0.0));
            }
        }
        let choice = fairness_threshold(&table, Metric::Precision, VarianceMode::GroupsOnly).unwrap();
        assert_eq!(choice.selected, CandidateId::Overall);
    }

    #[test]
    fn group_row_reproduces_group_optimum() {
        let scores = [0.1, 0.3, 0.5, 0.7, 0.3, 0.5, 0.7, 0.9, 0.2, 0.6];
        let labels = [0, 0, 1, 1, 0, 0, 1, 1, 1, 0];
        let p = partition_of(&[0, 0, 0, 0, 1, 1, 1, 1, 0, 1], &["male", "female"]);
        let s = ss(&scores, &labels);
        let table = boundary(&s, &p, &[Metric::Precision]).unwrap();
        let row = table.row(&CandidateId::Group("male".into())).unwrap();
        let males = s.subset(&p.groups[0].rows);
        let opt = youden_threshold(&males).unwrap();
        assert_eq!(row.threshold, opt.threshold);
        let m = &row.per_group[0].metrics;
        let sens = m.recall.get().unwrap();
        let spec = m.specificity.get().unwrap();
        assert_eq!(sens + spec - 1.0, opt.j);
    }

    /// 20 rows, two groups; the metric-vs-threshold step function is
    /// enumerated by hand from the sorted scores.
    #[test]
    fn boundary_matches_hand_enumeration() {
        let scores = [
            0.05, 0.15, 0.25, 0.35, 0.45, 0.55, 0.65, 0.75, 0.85, 0.95, // group a
            0.10, 0.20, 0.30, 0.40, 0.50, 0.60, 0.70, 0.80, 0.90, 0.99, // group b
        ];
        let labels = [
            0, 0, 0, 1, 0, 1, 0, 1, 1, 1, //
            0, 1, 0, 0, 0, 1, 1, 0, 1, 1,
        ];
        let assign: Vec<usize> = (0..20).map(|i| i / 10).collect();
        let p = partition_of(&assign, &["a", "b"]);
        let s = ss(&scores, &labels);
        let table = boundary(&s, &p, &[Metric::Precision, Metric::Recall]).unwrap();
        for row in &table.rows {
            for (k, g) in ["a", "b"].iter().enumerate() {
                // brute force: count predicted positives by direct comparison
                let (mut tp, mut fp, mut fn_) = (0, 0, 0);
                for i in (0..20).filter(|&i| assign[i] == k) {
                    let pred = scores[i] >= row.threshold;
                    match (pred, labels[i]) {
                        (true, 1) => tp += 1,
                        (true, _) => fp += 1,
                        (false, 1) => fn_ += 1,
                        _ => {}
                    }
                }
                let got = &row.per_group[k].metrics;
                assert_eq!(row.per_group[k].group, *g);
                if tp + fp > 0 {
                    assert_eq!(got.precision.get(), Some(tp as f64 / (tp + fp) as f64));
                }
                assert_eq!(got.recall.get(), Some(tp as f64 / (tp + fn_) as f64));
            }
        }
        // group a's own optimum: scores >= 0.5 capture positives 0.55..0.95
        // (4 of 5) and negatives 0.65 (1 of 5): J = 0.8 + 0.8 - 1 = 0.6;
        // at 0.3 all 5 positives and 2 of 5 negatives: J = 1 + 0.6 - 1 = 0.6;
        // the lowest of the tied thresholds (0.3) wins.
        let a = table.candidates.per_group[0].optimum.unwrap();
        assert!((a.threshold - 0.3).abs() < 1e-12, "{}", a.threshold);
        assert!((a.j - 0.6).abs() < 1e-12);
    }

    #[test]
    fn all_equal_variances_select_overall() {
        let scores = [0.1, 0.4, 0.35, 0.8, 0.1, 0.4, 0.35, 0.8];
        let labels = [0, 0, 1, 1, 0, 0, 1, 1];
        let p = partition_of(&[0, 0, 0, 0, 1, 1, 1, 1], &["a", "b"]);
        let table = boundary(&ss(&scores, &labels), &p, &[Metric::Auc]).unwrap();
        let c = fairness_threshold(&table, Metric::Auc, VarianceMode::GroupsOnly).unwrap();
        assert_eq!(c.selected, CandidateId::Overall);
    }

    #[test]
    fn mean_beats_other_ties_after_overall() {
        let mut table = boundary(
            &ss(&[0.1, 0.9, 0.2, 0.8], &[0, 1, 0, 1]),
            &partition_of(&[0, 0, 1, 1], &["a", "b"]),
            &[Metric::Precision],
        )
        .unwrap();
        table.rows.retain(|r| r.candidate != CandidateId::Overall);
        let c = fairness_threshold(&table, Metric::Precision, VarianceMode::GroupsOnly).unwrap();
        assert_eq!(c.selected, CandidateId::Mean);
    }

    #[test]
    fn no_defined_variance_is_an_error() {
        let table = boundary(
            &ss(&[0.1, 0.9, 0.2, 0.8], &[0, 1, 0, 1]),
            &partition_of(&[0, 0, 0, 0], &["a"]),
            &[Metric::Precision],
        )
        .unwrap();
        assert!(matches!(
            fairness_threshold(&table, Metric::Precision, VarianceMode::GroupsOnly),
            Err(Error::NoDefinedVariance(_))
        ));
        // with the overall value appended there are two values
        assert!(fairness_threshold(&table, Metric::Precision, VarianceMode::IncludeOverall).is_ok());
    }

    #[test]
    fn parity_examples() {
        let groups = vec![
            ("male".to_string(), MetricValue::defined(0.6908)),
            ("female".to_string(), MetricValue::defined(0.6724)),
        ];
        let v = parity_check(Metric::Auc, &groups, 0.02);
        assert!(v.pass);
        assert!((v.pairs[0].difference - 0.0184).abs() < 1e-12);
        assert!(!parity_check(Metric::Auc, &groups, 0.01).pass);

        let one = vec![("male".to_string(), MetricValue::defined(0.7))];
        let v = parity_check(Metric::Auc, &one, 0.01);
        assert!(v.pass && v.vacuous);

        let with_undefined = vec![
            ("a".to_string(), MetricValue::defined(0.5)),
            ("b".to_string(), MetricValue::undefined()),
        ];
        let v = parity_check(Metric::Auc, &with_undefined, 0.01);
        assert!(v.vacuous);
        assert_eq!(v.excluded, vec!["b".to_string()]);
    }

    #[test]
    fn candidate_ids_round_trip() {
        for id in [
            CandidateId::Overall,
            CandidateId::Group("41-70".into()),
            CandidateId::Min,
            CandidateId::Max,
            CandidateId::Mean,
            CandidateId::Median,
        ] {
            assert_eq!(id.to_string().parse::<CandidateId>().unwrap(), id);
        }
    }

    fn instance() -> impl Strategy<Value = (ScoreSet, GroupPartition)> {
        (4usize..80, 2usize..4).prop_flat_map(|(n, g)| {
            (
                proptest::collection::vec(0u32..=25, n),
                proptest::collection::vec(0u8..=1, n),
                proptest::collection::vec(0..g, n),
                Just(g),
            )
                .prop_filter_map("both classes and non-empty groups", |(raw, labels, assign, g)| {
                    let s = ScoreSet::new(raw.iter().map(|&r| f64::from(r) / 25.0).collect(), labels).ok()?;
                    if !s.has_both_classes() || (0..g).any(|k| !assign.contains(&k)) {
                        return None;
                    }
                    let names: Vec<String> = (0..g).map(|k| format!("g{k}")).collect();
                    let refs: Vec<&str> = names.iter().map(String::as_str).collect();
                    Some((s, partition_of(&assign, &refs)))
                })
        })
    }

    proptest! {
        #[test]
        fn fairness_threshold_is_minimal((s, p) in instance()) {
            let table = boundary(&s, &p, &Metric::ALL).unwrap();
            for m in Metric::ALL {
                for mode in [VarianceMode::GroupsOnly, VarianceMode::IncludeOverall] {
                    if let Ok(choice) = fairness_threshold(&table, m, mode) {
                        for row in &table.rows {
                            if let Some(v) = row.variance_for(m, mode).get() {
                                prop_assert!(choice.variance <= v);
                            }
                        }
                    }
                }
            }
        }

        #[test]
        fn boundary_rows_recompute((s, p) in instance()) {
            let table = boundary(&s, &p, &[Metric::Precision, Metric::F1]).unwrap();
            for row in &table.rows {
                for (k, g) in p.groups.iter().enumerate() {
                    let sub = s.subset(&g.rows);
                    prop_assert_eq!(&row.per_group[k].metrics, &evaluate(&sub, row.threshold));
                    prop_assert_eq!(row.per_group[k].metrics.confusion, confusion(&sub, row.threshold));
                }
                let recomputed = group_variance(&row.group_values(Metric::Precision));
                prop_assert_eq!(row.variance[&Metric::Precision], recomputed);
            }
        }

        #[test]
        fn parity_is_monotone_in_xi(values in proptest::collection::vec(0.0f64..1.0, 1..6), xi in 0.0f64..0.5, extra in 0.0f64..0.5) {
            let groups: Vec<(String, MetricValue)> = values.iter().enumerate()
                .map(|(i, &v)| (format!("g{i}"), MetricValue::defined(v))).collect();
            if parity_check(Metric::Auc, &groups, xi).pass {
                prop_assert!(parity_check(Metric::Auc, &groups, xi + extra).pass);
            }
        }
    }
}
