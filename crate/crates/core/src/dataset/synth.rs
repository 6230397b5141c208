//! Synthetic biased tabular data with a known group structure.
//!
//! Columns: `group` (categorical, protected), `proxy` (numeric, encodes the
//! group with the configured leakage), `x1..xk` (numeric, label-informative
//! with the same class-conditional law in every group) and `label`.

use rand::Rng as _;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::{Column, ColumnSpec, Dataset, FeatureColumn, ProtectedSpec, Schema};
use crate::error::{Error, Result};
use crate::seed;

pub const GROUP_COLUMN: &str = "group";
pub const PROXY_COLUMN: &str = "proxy";
pub const LABEL_COLUMN: &str = "label";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthGroup {
    pub name: String,
    pub proportion: f64,
    pub base_rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub rows: usize,
    pub groups: Vec<SynthGroup>,
    pub informative: usize,
    /// Distance between the class means of each informative feature, in
    /// units of its within-class standard deviation.
    pub separation: f64,
    pub leakage: f64,
    pub label_noise: f64,
    pub seed: u64,
}

impl SynthConfig {
    /// Two groups `A`/`B` with the given proportions and base rates.
    pub fn two_groups(rows: usize, proportions: [f64; 2], base_rates: [f64; 2], seed: u64) -> Self {
        SynthConfig {
            rows,
            groups: vec![
                SynthGroup {
                    name: "A".into(),
                    proportion: proportions[0],
                    base_rate: base_rates[0],
                },
                SynthGroup {
                    name: "B".into(),
                    proportion: proportions[1],
                    base_rate: base_rates[1],
                },
            ],
            informative: 3,
            separation: 1.0,
            leakage: 0.0,
            label_noise: 0.0,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.groups.is_empty() {
            return Err(Error::Config("synthetic data needs at least one group".into()));
        }
        let total: f64 = self.groups.iter().map(|g| g.proportion).sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::Config(format!(
                "group proportions must sum to 1, got {total}"
            )));
        }
        let unit = |x: f64| (0.0..=1.0).contains(&x);
        for g in &self.groups {
            if !unit(g.proportion) || !unit(g.base_rate) {
                return Err(Error::Config(format!(
                    "group '{}': proportion and base rate must lie in [0, 1]",
                    g.name
                )));
            }
        }
        if !unit(self.leakage) || !unit(self.label_noise) {
            return Err(Error::Config(
                "leakage and label noise must lie in [0, 1]".into(),
            ));
        }
        if !(self.separation.is_finite() && self.separation >= 0.0) {
            return Err(Error::Config("separation must be finite and non-negative".into()));
        }
        Ok(())
    }
}

pub fn synth_schema(config: &SynthConfig) -> Schema {
    let mut columns = vec![
        ColumnSpec::categorical(GROUP_COLUMN),
        ColumnSpec::numeric(PROXY_COLUMN),
    ];
    columns.extend((1..=config.informative).map(|j| ColumnSpec::numeric(format!("x{j}"))));
    columns.push(ColumnSpec::categorical(LABEL_COLUMN));
    Schema {
        columns,
        target: LABEL_COLUMN.into(),
        positive_label: "1".into(),
        protected: vec![ProtectedSpec {
            name: GROUP_COLUMN.into(),
            bins: None,
        }],
        missing_token: String::new(),
        dropped: vec![],
    }
}

pub fn synth_gen(config: &SynthConfig) -> Result<Dataset> {
    config.validate()?;
    let mut rng = seed::rng(config.seed);

    // Group codes 0..G standardised under the configured proportions, so the
    // proxy has unit variance whatever the leakage.
    let mean: f64 = config
        .groups
        .iter()
        .enumerate()
        .map(|(k, g)| k as f64 * g.proportion)
        .sum();
    let var: f64 = config
        .groups
        .iter()
        .enumerate()
        .map(|(k, g)| (k as f64 - mean).powi(2) * g.proportion)
        .sum();
    let sd = if var > 0.0 { var.sqrt() } else { 1.0 };
    let noise_scale = (1.0 - config.leakage * config.leakage).sqrt();

    let mut group = Vec::with_capacity(config.rows);
    let mut proxy = Vec::with_capacity(config.rows);
    let mut informative = vec![Vec::with_capacity(config.rows); config.informative];
    let mut labels = Vec::with_capacity(config.rows);

    for _ in 0..config.rows {
        let u: f64 = rng.random();
        let mut acc = 0.0;
        let mut k = config.groups.len() - 1;
        for (i, g) in config.groups.iter().enumerate() {
            acc += g.proportion;
            if u < acc {
                k = i;
                break;
            }
        }
        let y = rng.random_bool(config.groups[k].base_rate);
        let flip = rng.random_bool(config.label_noise);

        let z = (k as f64 - mean) / sd;
        let e: f64 = StandardNormal.sample(&mut rng);
        proxy.push(Some(config.leakage * z + noise_scale * e));

        let shift = if y { 0.5 } else { -0.5 } * config.separation;
        for col in informative.iter_mut() {
            let e: f64 = StandardNormal.sample(&mut rng);
            col.push(Some(shift + e));
        }
        group.push(Some(config.groups[k].name.clone()));
        labels.push(u8::from(y ^ flip));
    }

    let mut features = vec![
        FeatureColumn {
            name: GROUP_COLUMN.into(),
            data: Column::Categorical(group),
        },
        FeatureColumn {
            name: PROXY_COLUMN.into(),
            data: Column::Numeric(proxy),
        },
    ];
    features.extend(informative.into_iter().enumerate().map(|(j, v)| FeatureColumn {
        name: format!("x{}", j + 1),
        data: Column::Numeric(v),
    }));
    Dataset::new(synth_schema(config), features, labels)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::partition;

    fn group_rates(ds: &Dataset) -> Vec<(String, usize, f64)> {
        let p = partition(ds, GROUP_COLUMN, None).unwrap();
        p.groups
            .iter()
            .map(|g| {
                let pos = g.rows.iter().filter(|&&r| ds.labels()[r] == 1).count();
                (g.label.clone(), g.rows.len(), pos as f64 / g.rows.len() as f64)
            })
            .collect()
    }

    #[test]
    fn unbiased_configuration_has_half_positive_rates() {
        let ds = synth_gen(&SynthConfig::two_groups(4000, [0.5, 0.5], [0.5, 0.5], 1)).unwrap();
        for (_, n, rate) in group_rates(&ds) {
            let sigma = (0.25 / n as f64).sqrt();
            assert!((rate - 0.5).abs() < 3.0 * sigma, "rate {rate} n {n}");
        }
    }

    #[test]
    fn base_rate_gap_is_reproduced() {
        let ds = synth_gen(&SynthConfig::two_groups(10_000, [0.5, 0.5], [0.8, 0.2], 2)).unwrap();
        let r = group_rates(&ds);
        let (na, ra) = (r[0].1 as f64, r[0].2);
        let (nb, rb) = (r[1].1 as f64, r[1].2);
        // binomial standard error of the difference of two proportions
        let sigma = (0.8 * 0.2 / na + 0.2 * 0.8 / nb).sqrt();
        assert!(((ra - rb) - 0.6).abs() < 3.0 * sigma, "diff {}", ra - rb);
    }

    #[test]
    fn proportions_are_followed() {
        let ds = synth_gen(&SynthConfig::two_groups(10_000, [0.8, 0.2], [0.5, 0.5], 3)).unwrap();
        let r = group_rates(&ds);
        let share = r[0].1 as f64 / 10_000.0;
        assert!((share - 0.8).abs() < 3.0 * (0.16f64 / 10_000.0).sqrt());
    }

    #[test]
    fn deterministic_under_seed() {
        let cfg = SynthConfig::two_groups(500, [0.5, 0.5], [0.7, 0.3], 9);
        assert_eq!(synth_gen(&cfg).unwrap(), synth_gen(&cfg).unwrap());
        let mut other = cfg.clone();
        other.seed = 10;
        assert_ne!(synth_gen(&cfg).unwrap(), synth_gen(&other).unwrap());
    }

    #[test]
    fn invalid_configs_are_rejected() {
        let mut cfg = SynthConfig::two_groups(10, [0.5, 0.6], [0.5, 0.5], 0);
        assert!(synth_gen(&cfg).is_err());
        cfg.groups[1].proportion = 0.5;
        cfg.leakage = 1.5;
        assert!(synth_gen(&cfg).is_err());
    }
}
