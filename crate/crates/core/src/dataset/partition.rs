use serde::{Deserialize, Serialize};

use super::{BinningSpec, Column, Dataset};
use crate::error::{Error, Result};

/// Label given to rows whose protected value is missing.
pub const UNKNOWN_GROUP: &str = "unknown";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Group {
    pub label: String,
    pub rows: Vec<usize>,
}

/// Rows of a dataset grouped by the categories of one protected feature.
///
/// Groups are disjoint, non-empty and cover every row. Categorical groups are
/// ordered by label, binned groups by bin, and the `unknown` group comes last.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroupPartition {
    pub feature: String,
    pub groups: Vec<Group>,
}

impl GroupPartition {
    pub fn labels(&self) -> impl Iterator<Item = &str> {
        self.groups.iter().map(|g| g.label.as_str())
    }

    pub fn group(&self, label: &str) -> Option<&Group> {
        self.groups.iter().find(|g| g.label == label)
    }

    pub fn len(&self) -> usize {
        self.groups.len()
    }

    pub fn is_empty(&self) -> bool {
        self.groups.is_empty()
    }

    /// True when the groups are disjoint and cover exactly `0..n`.
    pub fn covers(&self, n: usize) -> bool {
        let mut seen = vec![false; n];
        for g in &self.groups {
            for &r in &g.rows {
                if r >= n || seen[r] {
                    return false;
                }
                seen[r] = true;
            }
        }
        seen.into_iter().all(|s| s)
    }

    /// Group label for each row, `0..n`.
    pub fn assignment(&self, n: usize) -> Vec<usize> {
        let mut out = vec![usize::MAX; n];
        for (k, g) in self.groups.iter().enumerate() {
            for &r in &g.rows {
                out[r] = k;
            }
        }
        out
    }
}

/// Picks the binning for a numeric protected feature: the explicit argument,
/// then the schema's declared bins, then the default age bins for a column
/// named `age`.
pub fn resolve_binning(
    dataset: &Dataset,
    feature: &str,
    binning: Option<&BinningSpec>,
) -> Result<BinningSpec> {
    if let Some(b) = binning {
        return Ok(b.clone());
    }
    if let Some(cuts) = dataset
        .schema()
        .protected_spec(feature)
        .and_then(|p| p.bins.clone())
    {
        return BinningSpec::new(cuts);
    }
    if feature.eq_ignore_ascii_case("age") {
        return Ok(BinningSpec::default_age());
    }
    Err(Error::Usage(format!(
        "numeric protected feature '{feature}' needs a binning specification"
    )))
}

/// Groups rows by a protected feature. Bins that receive no rows are an
/// error.
pub fn partition(
    dataset: &Dataset,
    feature: &str,
    binning: Option<&BinningSpec>,
) -> Result<GroupPartition> {
    build(dataset, feature, binning, false)
}

/// Like [`partition`], but bins that receive no rows are left out. Used on
/// evaluation subsets, where a sparse bin may legitimately be empty.
pub fn partition_observed(
    dataset: &Dataset,
    feature: &str,
    binning: Option<&BinningSpec>,
) -> Result<GroupPartition> {
    build(dataset, feature, binning, true)
}

fn build(
    dataset: &Dataset,
    feature: &str,
    binning: Option<&BinningSpec>,
    drop_empty: bool,
) -> Result<GroupPartition> {
    if !dataset.schema().is_protected(feature) {
        return Err(Error::Usage(format!(
            "'{feature}' is not declared as a protected feature"
        )));
    }
    let column = dataset
        .column(feature)
        .ok_or_else(|| Error::MissingColumns(vec![feature.to_string()]))?;

    let mut unknown = Vec::new();
    let mut groups: Vec<Group> = match column {
        Column::Categorical(values) => {
            if binning.is_some() {
                return Err(Error::Usage(format!(
                    "binning given for categorical feature '{feature}'"
                )));
            }
            let mut map = std::collections::BTreeMap::<&str, Vec<usize>>::new();
            for (i, v) in values.iter().enumerate() {
                match v {
                    Some(c) => map.entry(c.as_str()).or_default().push(i),
                    None => unknown.push(i),
                }
            }
            map.into_iter()
                .map(|(label, rows)| Group {
                    label: label.to_string(),
                    rows,
                })
                .collect()
        }
        Column::Numeric(values) => {
            let bins = resolve_binning(dataset, feature, binning)?;
            let mut rows = vec![Vec::new(); bins.bin_count()];
            for (i, v) in values.iter().enumerate() {
                match v {
                    Some(x) => rows[bins.bin_of(*x)].push(i),
                    None => unknown.push(i),
                }
            }
            let labels = bins.labels();
            let empty: Vec<String> = labels
                .iter()
                .zip(&rows)
                .filter(|(_, r)| r.is_empty())
                .map(|(l, _)| l.clone())
                .collect();
            if !empty.is_empty() && !drop_empty && !dataset.is_empty() {
                return Err(Error::EmptyGroup {
                    feature: feature.to_string(),
                    categories: empty,
                });
            }
            labels
                .into_iter()
                .zip(rows)
                .filter(|(_, r)| !r.is_empty())
                .map(|(label, rows)| Group { label, rows })
                .collect()
        }
    };
    if !unknown.is_empty() {
        groups.push(Group {
            label: UNKNOWN_GROUP.to_string(),
            rows: unknown,
        });
    }
    Ok(GroupPartition {
        feature: feature.to_string(),
        groups,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{ColumnSpec, FeatureColumn, ProtectedSpec, Schema};
    use proptest::prelude::*;

    fn dataset(gender: Vec<Option<&str>>, age: Vec<Option<f64>>) -> Dataset {
        let n = gender.len();
        let schema = Schema {
            columns: vec![
                ColumnSpec::categorical("gender"),
                ColumnSpec::numeric("age"),
                ColumnSpec::numeric("income"),
                ColumnSpec::categorical("y"),
            ],
            target: "y".into(),
            positive_label: "1".into(),
            protected: vec![
                ProtectedSpec {
                    name: "gender".into(),
                    bins: None,
                },
                ProtectedSpec {
                    name: "age".into(),
                    bins: None,
                },
            ],
            missing_token: String::new(),
            dropped: vec![],
        };
        Dataset::new(
            schema,
            vec![
                FeatureColumn {
                    name: "gender".into(),
                    data: Column::Categorical(
                        gender.into_iter().map(|g| g.map(str::to_string)).collect(),
                    ),
                },
                FeatureColumn {
                    name: "age".into(),
                    data: Column::Numeric(age),
                },
                FeatureColumn {
                    name: "income".into(),
                    data: Column::Numeric(vec![Some(1.0); n]),
                },
            ],
            (0..n).map(|i| (i % 2) as u8).collect(),
        )
        .unwrap()
    }

    #[test]
    fn gender_groups() {
        let mut g = vec![Some("male"); 6];
        g.extend(vec![Some("female"); 4]);
        let ds = dataset(g, vec![Some(30.0); 10]);
        let p = partition(&ds, "gender", None).unwrap();
        assert_eq!(p.group("male").unwrap().rows.len(), 6);
        assert_eq!(p.group("female").unwrap().rows.len(), 4);
        assert!(p.covers(10));
    }

    #[test]
    fn default_age_bins_assign_rows() {
        let ds = dataset(vec![Some("m"); 3], vec![Some(12.0), Some(45.0), Some(80.0)]);
        let p = partition(&ds, "age", None).unwrap();
        let got: Vec<(&str, Vec<usize>)> = p
            .groups
            .iter()
            .map(|g| (g.label.as_str(), g.rows.clone()))
            .collect();
        assert_eq!(
            got,
            vec![("xx-40", vec![0]), ("41-70", vec![1]), ("71-xx", vec![2])]
        );
    }

    #[test]
    fn single_category_is_one_group() {
        let ds = dataset(vec![Some("m"); 5], vec![Some(1.0); 5]);
        let p = partition(&ds, "gender", None).unwrap();
        assert_eq!(p.groups.len(), 1);
        assert_eq!(p.groups[0].rows, vec![0, 1, 2, 3, 4]);
    }

    #[test]
    fn missing_values_form_unknown_group() {
        let ds = dataset(
            vec![Some("m"), None, Some("f")],
            vec![Some(20.0), Some(50.0), None],
        );
        let p = partition(&ds, "gender", None).unwrap();
        assert_eq!(p.group(UNKNOWN_GROUP).unwrap().rows, vec![1]);
        let p = partition(&ds, "age", Some(&BinningSpec::new(vec![30.0]).unwrap())).unwrap();
        assert_eq!(p.group(UNKNOWN_GROUP).unwrap().rows, vec![2]);
        assert!(p.covers(3));
    }

    #[test]
    fn empty_bin_is_reported_unless_observed() {
        let ds = dataset(vec![Some("m"); 2], vec![Some(20.0), Some(30.0)]);
        match partition(&ds, "age", None) {
            Err(Error::EmptyGroup { categories, .. }) => {
                assert_eq!(categories, vec!["41-70", "71-xx"])
            }
            other => panic!("unexpected {other:?}"),
        }
        let p = partition_observed(&ds, "age", None).unwrap();
        assert_eq!(p.groups.len(), 1);
    }

    #[test]
    fn non_protected_feature_is_rejected() {
        let ds = dataset(vec![Some("m"); 2], vec![Some(20.0); 2]);
        assert!(matches!(partition(&ds, "income", None), Err(Error::Usage(_))));
    }

    proptest! {
        #[test]
        fn partition_is_disjoint_cover(
            cats in proptest::collection::vec(proptest::option::weighted(0.9, 0u8..4), 1..80),
            ages in proptest::collection::vec(proptest::option::weighted(0.9, 0.0f64..100.0), 80),
        ) {
            let n = cats.len();
            let names = ["a", "b", "c", "d"];
            let ds = dataset(
                cats.iter().map(|c| c.map(|k| names[k as usize])).collect(),
                ages[..n].to_vec(),
            );
            let p = partition(&ds, "gender", None).unwrap();
            prop_assert!(p.covers(n));
            prop_assert!(p.groups.iter().all(|g| !g.rows.is_empty()));
            let p = partition_observed(&ds, "age", None).unwrap();
            prop_assert!(p.covers(n));
            prop_assert!(p.groups.iter().all(|g| !g.rows.is_empty()));
        }
    }
}
