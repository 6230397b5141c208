use parity_core::dataset::{Group, GroupPartition};
use parity_core::fairness::{boundary, fairness_threshold, CandidateId, VarianceMode};
use parity_core::metrics::{Metric, ScoreSet};
use parity_core::seed;
use rand::Rng as _;
use rand_distr::{Distribution, Normal};

/// Two groups with different score shifts and class balance.
fn skewed(seed_value: u64) -> (ScoreSet, GroupPartition) {
    let mut rng = seed::rng(seed_value);
    let mut scores = Vec::new();
    let mut labels = Vec::new();
    let mut groups = vec![Vec::new(), Vec::new()];
    for (g, (n, base, shift)) in [(300usize, 0.7, 0.1), (80, 0.2, -0.1)].into_iter().enumerate() {
        for _ in 0..n {
            let y = u8::from(rng.random::<f64>() < base);
            let centre = if y == 1 { 0.65 } else { 0.35 } + shift;
            let s: f64 = Normal::new(centre, 0.15).unwrap().sample(&mut rng);
            groups[g].push(scores.len());
            scores.push(s.clamp(0.0, 1.0));
            labels.push(y);
        }
    }
    let partition = GroupPartition {
        feature: "g".into(),
        groups: groups
            .into_iter()
            .zip(["a", "b"])
            .map(|(rows, label)| Group {
                label: label.into(),
                rows,
            })
            .collect(),
    };
    (ScoreSet::new(scores, labels).unwrap(), partition)
}

#[test]
fn min_candidate_can_be_the_fairness_threshold() {
    let found = (0..300).find(|&s| {
        let (scores, partition) = skewed(s);
        let table = boundary(&scores, &partition, &[Metric::Precision]).unwrap();
        let choice = fairness_threshold(&table, Metric::Precision, VarianceMode::GroupsOnly).unwrap();
        let strictly = choice
            .per_candidate
            .iter()
            .filter(|c| c.threshold != choice.threshold)
            .all(|c| c.variance.get().is_none_or(|v| v > choice.variance));
        choice.selected == CandidateId::Min && strictly
    });
    assert!(found.is_some(), "no skewed instance selected the min candidate");
}

#[test]
fn fairness_threshold_need_not_maximise_precision() {
    let found = (0..300).find(|&s| {
        let (scores, partition) = skewed(s);
        let table = boundary(&scores, &partition, &[Metric::Precision]).unwrap();
        let choice = fairness_threshold(&table, Metric::Precision, VarianceMode::GroupsOnly).unwrap();
        let best = table
            .rows
            .iter()
            .max_by(|a, b| a.overall.precision.reported().total_cmp(&b.overall.precision.reported()))
            .unwrap();
        best.overall.precision.reported() > table.row(&choice.selected).unwrap().overall.precision.reported()
    });
    assert!(found.is_some());
}

#[test]
fn identical_groups_have_zero_variance_everywhere() {
    let (scores, _) = skewed(1);
    let n = scores.len();
    let doubled = ScoreSet::new(
        scores.scores().iter().chain(scores.scores()).copied().collect(),
        scores.labels().iter().chain(scores.labels()).copied().collect(),
    )
    .unwrap();
    let partition = GroupPartition {
        feature: "g".into(),
        groups: vec![
            Group {
                label: "a".into(),
                rows: (0..n).collect(),
            },
            Group {
                label: "b".into(),
                rows: (n..2 * n).collect(),
            },
        ],
    };
    let table = boundary(&doubled, &partition, &Metric::ALL).unwrap();
    for row in &table.rows {
        for m in Metric::ALL {
            assert_eq!(row.variance[&m].get(), Some(0.0), "{} {m}", row.candidate);
        }
    }
}

#[test]
fn modes_can_disagree_but_both_are_minimal() {
    for s in 0..50 {
        let (scores, partition) = skewed(s);
        let table = boundary(&scores, &partition, &[Metric::F1]).unwrap();
        for mode in [VarianceMode::GroupsOnly, VarianceMode::IncludeOverall] {
            let choice = fairness_threshold(&table, Metric::F1, mode).unwrap();
            for row in &table.rows {
                if let Some(v) = row.variance_for(Metric::F1, mode).get() {
                    assert!(choice.variance <= v);
                }
            }
        }
    }
}
