//! Reference learners: logistic regression, random forest and
//! gradient-boosted trees, with gain-based importance and proxy selection.

mod association;
pub mod encoding;
pub mod linear;
pub mod tree;

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::metrics::ScoreSet;
use crate::seed;

pub use association::{association, select_proxies, AssociationKind, AssociationScore};
pub use encoding::{FeatureEncoder, Matrix};
pub use linear::LinearModel;
pub use tree::{Tree, TreeNode};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    Logreg,
    Forest,
    Gbt,
}

impl Algorithm {
    pub const ALL: [Algorithm; 3] = [Algorithm::Gbt, Algorithm::Forest, Algorithm::Logreg];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Logreg => "logreg",
            Algorithm::Forest => "forest",
            Algorithm::Gbt => "gbt",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Algorithm::ALL
            .into_iter()
            .find(|a| a.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::Usage(format!("unknown algorithm '{s}'")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogregParams {
    pub learning_rate: f64,
    pub iterations: usize,
    pub l2: f64,
}

impl Default for LogregParams {
    fn default() -> Self {
        LogregParams {
            learning_rate: 0.1,
            iterations: 500,
            l2: 1e-4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestParams {
    pub trees: usize,
    pub max_depth: usize,
    pub min_leaf: usize,
    /// Fraction of encoded columns tried per split; `None` means `sqrt(p)/p`.
    pub feature_fraction: Option<f64>,
    pub seed: u64,
}

impl Default for ForestParams {
    fn default() -> Self {
        ForestParams {
            trees: 100,
            max_depth: 8,
            min_leaf: 5,
            feature_fraction: None,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GbtParams {
    pub rounds: usize,
    pub max_depth: usize,
    pub learning_rate: f64,
    pub min_leaf: usize,
    /// Row fraction drawn (without replacement) per round.
    pub subsample: f64,
    pub seed: u64,
}

impl Default for GbtParams {
    fn default() -> Self {
        GbtParams {
            rounds: 100,
            max_depth: 3,
            learning_rate: 0.1,
            min_leaf: 5,
            subsample: 1.0,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "algorithm", rename_all = "lowercase")]
pub enum ModelConfig {
    Logreg(LogregParams),
    Forest(ForestParams),
    Gbt(GbtParams),
}

impl ModelConfig {
    pub fn default_for(algorithm: Algorithm, seed: u64) -> Self {
        match algorithm {
            Algorithm::Logreg => ModelConfig::Logreg(LogregParams::default()),
            Algorithm::Forest => ModelConfig::Forest(ForestParams {
                seed,
                ..ForestParams::default()
            }),
            Algorithm::Gbt => ModelConfig::Gbt(GbtParams {
                seed,
                ..GbtParams::default()
            }),
        }
    }

    pub fn algorithm(&self) -> Algorithm {
        match self {
            ModelConfig::Logreg(_) => Algorithm::Logreg,
            ModelConfig::Forest(_) => Algorithm::Forest,
            ModelConfig::Gbt(_) => Algorithm::Gbt,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let rate = |name: &str, v: f64| {
            if v > 0.0 && v <= 1.0 {
                Ok(())
            } else {
                Err(Error::Config(format!("{name} must lie in (0, 1], got {v}")))
            }
        };
        let positive = |name: &str, v: usize| {
            if v > 0 {
                Ok(())
            } else {
                Err(Error::Config(format!("{name} must be positive")))
            }
        };
        match self {
            ModelConfig::Logreg(p) => {
                rate("learning rate", p.learning_rate)?;
                positive("iterations", p.iterations)?;
                if !(p.l2 >= 0.0 && p.l2.is_finite()) {
                    return Err(Error::Config("L2 strength must be non-negative".into()));
                }
            }
            ModelConfig::Forest(p) => {
                positive("tree count", p.trees)?;
                positive("max depth", p.max_depth)?;
                positive("min leaf size", p.min_leaf)?;
                if let Some(f) = p.feature_fraction {
                    rate("feature fraction", f)?;
                }
            }
            ModelConfig::Gbt(p) => {
                positive("rounds", p.rounds)?;
                positive("max depth", p.max_depth)?;
                positive("min leaf size", p.min_leaf)?;
                rate("learning rate", p.learning_rate)?;
                rate("subsample", p.subsample)?;
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Parameters {
    Linear(LinearModel),
    Forest {
        trees: Vec<Tree>,
    },
    Boosted {
        base_margin: f64,
        learning_rate: f64,
        trees: Vec<Tree>,
    },
}

/// A fitted learner together with the encoding it was trained under.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedModel {
    pub algorithm: Algorithm,
    pub config: ModelConfig,
    pub encoder: FeatureEncoder,
    pub parameters: Parameters,
}

pub fn train(train_set: &Dataset, config: &ModelConfig) -> Result<TrainedModel> {
    config.validate()?;
    let positives = train_set.positives();
    if positives == 0 || positives == train_set.len() {
        return Err(Error::SingleClass(format!(
            "training set has {} rows, {} positive",
            train_set.len(),
            positives
        )));
    }
    let encoder = FeatureEncoder::fit(train_set)?;
    let x = encoder.transform(train_set)?;
    if x.cols == 0 {
        return Err(Error::Usage("encoded feature set is empty".into()));
    }
    let y = train_set.labels();
    let parameters = match config {
        ModelConfig::Logreg(p) => {
            Parameters::Linear(linear::fit(&x, y, p.learning_rate, p.iterations, p.l2))
        }
        ModelConfig::Forest(p) => fit_forest(&x, y, p),
        ModelConfig::Gbt(p) => fit_boosted(&x, y, p),
    };
    Ok(TrainedModel {
        algorithm: config.algorithm(),
        config: config.clone(),
        encoder,
        parameters,
    })
}

fn fit_forest(x: &Matrix, y: &[u8], p: &ForestParams) -> Parameters {
    let target: Vec<f64> = y.iter().map(|&v| f64::from(v)).collect();
    let cols = x.cols as f64;
    let fraction = p.feature_fraction.unwrap_or(cols.sqrt() / cols);
    let per_node = ((fraction * cols).round() as usize).clamp(1, x.cols);
    let params = tree::GrowParams {
        max_depth: p.max_depth,
        min_leaf: p.min_leaf,
        features_per_node: Some(per_node),
    };
    let mut rng = seed::rng(p.seed);
    let mean = |rows: &[usize]| rows.iter().map(|&r| target[r]).sum::<f64>() / rows.len() as f64;
    let trees = (0..p.trees)
        .map(|_| {
            let rows: Vec<usize> = (0..x.rows).map(|_| rng.random_range(0..x.rows)).collect();
            tree::grow(x, &rows, &target, tree::Impurity::Gini, params, Some(&mut rng), mean)
        })
        .collect();
    Parameters::Forest { trees }
}

fn fit_boosted(x: &Matrix, y: &[u8], p: &GbtParams) -> Parameters {
    let n = x.rows;
    let rate = y.iter().map(|&v| f64::from(v)).sum::<f64>() / n as f64;
    let base_margin = (rate / (1.0 - rate)).ln();
    let mut margin = vec![base_margin; n];
    let mut residual = vec![0.0; n];
    let mut hessian = vec![0.0; n];
    let params = tree::GrowParams {
        max_depth: p.max_depth,
        min_leaf: p.min_leaf,
        features_per_node: None,
    };
    let mut rng = seed::rng(p.seed);
    let sample_size = ((p.subsample * n as f64).round() as usize).clamp(1, n);
    let mut trees = Vec::with_capacity(p.rounds);
    for _ in 0..p.rounds {
        for i in 0..n {
            let prob = linear::sigmoid(margin[i]);
            residual[i] = f64::from(y[i]) - prob;
            hessian[i] = prob * (1.0 - prob);
        }
        let rows: Vec<usize> = if sample_size < n {
            let mut r = rand::seq::index::sample(&mut rng, n, sample_size).into_vec();
            r.sort_unstable();
            r
        } else {
            (0..n).collect()
        };
        // one Newton step per leaf on the logistic loss
        let newton = |rows: &[usize]| {
            let g: f64 = rows.iter().map(|&r| residual[r]).sum();
            let h: f64 = rows.iter().map(|&r| hessian[r]).sum();
            if h > 1e-12 {
                g / h
            } else {
                0.0
            }
        };
        let t = tree::grow(x, &rows, &residual, tree::Impurity::Variance, params, None, newton);
        for (i, m) in margin.iter_mut().enumerate() {
            *m += p.learning_rate * t.predict(x.row(i));
        }
        trees.push(t);
    }
    Parameters::Boosted {
        base_margin,
        learning_rate: p.learning_rate,
        trees,
    }
}

impl TrainedModel {
    /// Raw score of an encoded row: the boosted margin for gbt, the
    /// probability otherwise.
    fn score_row(&self, row: &[f64]) -> f64 {
        match &self.parameters {
            Parameters::Linear(m) => m.predict_proba(row),
            Parameters::Forest { trees } => {
                trees.iter().map(|t| t.predict(row)).sum::<f64>() / trees.len() as f64
            }
            Parameters::Boosted {
                base_margin,
                learning_rate,
                trees,
            } => linear::sigmoid(
                base_margin + learning_rate * trees.iter().map(|t| t.predict(row)).sum::<f64>(),
            ),
        }
    }

    /// Margin of the boosted ensemble before the logistic link.
    pub fn boosted_margin(&self, data: &Dataset) -> Result<Vec<f64>> {
        let Parameters::Boosted {
            base_margin,
            learning_rate,
            trees,
        } = &self.parameters
        else {
            return Err(Error::Usage("margins exist only for gbt models".into()));
        };
        let x = self.encoder.transform(data)?;
        Ok((0..x.rows)
            .map(|i| {
                base_margin + learning_rate * trees.iter().map(|t| t.predict(x.row(i))).sum::<f64>()
            })
            .collect())
    }

    pub fn feature_names(&self) -> Vec<String> {
        self.encoder.feature_names().map(str::to_string).collect()
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let text = serde_json::to_string_pretty(self)?;
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<TrainedModel> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(serde_json::from_str(&text)?)
    }
}

/// Scores every row of `data`; columns the model was not trained on are
/// ignored.
pub fn predict(model: &TrainedModel, data: &Dataset) -> Result<ScoreSet> {
    let x = model.encoder.transform(data)?;
    let scores = (0..x.rows)
        .map(|i| model.score_row(x.row(i)).clamp(0.0, 1.0))
        .collect();
    ScoreSet::new(scores, data.labels().to_vec())?.with_rows(data.row_ids().to_vec())
}

/// Features ranked by normalised importance, descending.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImportanceRanking {
    pub entries: Vec<(String, f64)>,
    /// Set when the ensemble has no splits and every importance is 0.
    pub all_zero: bool,
}

impl ImportanceRanking {
    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.entries.iter().map(|(n, _)| n.as_str())
    }
}

/// Un-normalised importance per source feature (in encoder order): the sum
/// over every split of its impurity decrease times the share of training
/// rows reaching it.
pub fn raw_importance(model: &TrainedModel) -> Result<Vec<(String, f64)>> {
    let Parameters::Boosted { trees, .. } = &model.parameters else {
        return Err(Error::Usage(format!(
            "importance is defined for gbt models, not {}",
            model.algorithm
        )));
    };
    let mut per_column = vec![0.0; model.encoder.width()];
    for t in trees {
        t.accumulate_importance(&mut per_column);
    }
    let mut per_feature = vec![0.0; model.encoder.features.len()];
    for (col, src) in model.encoder.column_sources().into_iter().enumerate() {
        per_feature[src] += per_column[col];
    }
    Ok(model
        .encoder
        .feature_names()
        .map(str::to_string)
        .zip(per_feature)
        .collect())
}

pub fn importance(model: &TrainedModel) -> Result<ImportanceRanking> {
    let mut entries = raw_importance(model)?;
    let total: f64 = entries.iter().map(|(_, v)| v).sum();
    let all_zero = total <= 0.0;
    if all_zero {
        log::warn!("boosted ensemble has no splits; importance is all zero");
    } else {
        for (_, v) in entries.iter_mut() {
            *v /= total;
        }
    }
    entries.sort_by(|a, b| b.1.total_cmp(&a.1));
    Ok(ImportanceRanking { entries, all_zero })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{ablate, Column, ColumnSpec, FeatureColumn, ProtectedSpec, Schema};
    use crate::metrics::confusion;
    use rand_distr::{Distribution, StandardNormal};

    fn numeric_dataset(cols: &[(&str, Vec<f64>)], labels: Vec<u8>) -> Dataset {
        let mut columns: Vec<ColumnSpec> = cols.iter().map(|(n, _)| ColumnSpec::numeric(*n)).collect();
        columns.push(ColumnSpec::categorical("y"));
        Dataset::new(
            Schema {
                columns,
                target: "y".into(),
                positive_label: "1".into(),
                protected: vec![],
                missing_token: String::new(),
                dropped: vec![],
            },
            cols.iter()
                .map(|(n, v)| FeatureColumn {
                    name: n.to_string(),
                    data: Column::Numeric(v.iter().map(|&x| Some(x)).collect()),
                })
                .collect(),
            labels,
        )
        .unwrap()
    }

    fn separable(seed: u64) -> Dataset {
        let mut rng = seed::rng(seed);
        let mut a = Vec::new();
        let mut b = Vec::new();
        let mut y = Vec::new();
        for i in 0..100 {
            let label = (i % 2) as u8;
            let shift = if label == 1 { 2.0 } else { -2.0 };
            let e1: f64 = StandardNormal.sample(&mut rng);
            let e2: f64 = StandardNormal.sample(&mut rng);
            a.push(shift + 0.5 * e1);
            b.push(-shift + 0.5 * e2);
            y.push(label);
        }
        numeric_dataset(&[("a", a), ("b", b)], y)
    }

    fn training_accuracy(model: &TrainedModel, data: &Dataset) -> f64 {
        let s = predict(model, data).unwrap();
        let cm = confusion(&s, 0.5);
        (cm.tp + cm.tn) as f64 / cm.total() as f64
    }

    #[test]
    fn every_learner_fits_separable_data() {
        let ds = separable(1);
        for algo in Algorithm::ALL {
            let model = train(&ds, &ModelConfig::default_for(algo, 3)).unwrap();
            let acc = training_accuracy(&model, &ds);
            assert!(acc >= 0.95, "{algo}: accuracy {acc}");
        }
    }

    #[test]
    fn single_class_training_fails() {
        let ds = numeric_dataset(&[("a", vec![1.0, 2.0, 3.0])], vec![0, 0, 0]);
        for algo in Algorithm::ALL {
            assert!(matches!(
                train(&ds, &ModelConfig::default_for(algo, 0)),
                Err(Error::SingleClass(_))
            ));
        }
    }

    #[test]
    fn empty_feature_set_fails() {
        let ds = numeric_dataset(&[("a", vec![1.0, 2.0, 3.0, 4.0])], vec![0, 1, 0, 1]);
        let none = ablate(&ds, &["a"]).unwrap();
        assert!(matches!(
            train(&none, &ModelConfig::default_for(Algorithm::Logreg, 0)),
            Err(Error::Usage(_))
        ));
    }

    #[test]
    fn training_is_deterministic() {
        let ds = separable(2);
        for algo in Algorithm::ALL {
            let cfg = ModelConfig::default_for(algo, 11);
            let a = predict(&train(&ds, &cfg).unwrap(), &ds).unwrap();
            let b = predict(&train(&ds, &cfg).unwrap(), &ds).unwrap();
            assert_eq!(a, b, "{algo}");
        }
    }

    #[test]
    fn scores_are_probabilities() {
        let ds = separable(3);
        for algo in Algorithm::ALL {
            let model = train(&ds, &ModelConfig::default_for(algo, 0)).unwrap();
            let s = predict(&model, &ds).unwrap();
            assert_eq!(s.len(), ds.len());
            assert!(s.scores().iter().all(|v| (0.0..=1.0).contains(v)));
        }
    }

    #[test]
    fn boosted_scores_are_monotone_in_margin() {
        let ds = separable(4);
        let model = train(&ds, &ModelConfig::default_for(Algorithm::Gbt, 0)).unwrap();
        let margins = model.boosted_margin(&ds).unwrap();
        let scores = predict(&model, &ds).unwrap();
        for i in 0..ds.len() {
            for j in 0..ds.len() {
                if margins[i] < margins[j] {
                    assert!(scores.scores()[i] <= scores.scores()[j]);
                }
            }
        }
    }

    #[test]
    fn predict_ignores_extra_columns() {
        let mut ds = separable(5);
        // add a categorical protected column, train without it
        let n = ds.len();
        let mut schema = ds.schema().clone();
        schema.columns.insert(0, ColumnSpec::categorical("gender"));
        schema.protected.push(ProtectedSpec {
            name: "gender".into(),
            bins: None,
        });
        let mut features = vec![FeatureColumn {
            name: "gender".into(),
            data: Column::Categorical((0..n).map(|i| Some(if i % 3 == 0 { "f" } else { "m" }.to_string())).collect()),
        }];
        features.extend(ds.features().iter().cloned());
        ds = Dataset::new(schema, features, ds.labels().to_vec()).unwrap();

        let without = ablate(&ds, &["gender"]).unwrap();
        for algo in Algorithm::ALL {
            let model = train(&without, &ModelConfig::default_for(algo, 1)).unwrap();
            assert!(!model.feature_names().contains(&"gender".to_string()));
            let full = predict(&model, &ds).unwrap();
            let abl = predict(&model, &without).unwrap();
            assert_eq!(full.scores(), abl.scores());
        }
    }

    #[test]
    fn predict_rejects_missing_columns() {
        let ds = separable(6);
        let model = train(&ds, &ModelConfig::default_for(Algorithm::Logreg, 0)).unwrap();
        let missing = ablate(&ds, &["b"]).unwrap();
        match predict(&model, &missing) {
            Err(Error::SchemaMismatch(msg)) => assert!(msg.contains('b')),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn zero_logreg_scores_one_half() {
        let ds = separable(7);
        let mut model = train(&ds, &ModelConfig::default_for(Algorithm::Logreg, 0)).unwrap();
        model.parameters = Parameters::Linear(LinearModel {
            weights: vec![0.0; 2],
            intercept: 0.0,
        });
        assert!(predict(&model, &ds).unwrap().scores().iter().all(|&s| s == 0.5));
    }

    #[test]
    fn importance_prefers_the_informative_feature() {
        let mut rng = seed::rng(8);
        let y: Vec<u8> = (0..300).map(|i| (i % 2) as u8).collect();
        let f1: Vec<f64> = y.iter().map(|&v| f64::from(v)).collect();
        let f2: Vec<f64> = (0..300).map(|_| StandardNormal.sample(&mut rng)).collect();
        let ds = numeric_dataset(&[("f1", f1), ("f2", f2)], y);
        let model = train(&ds, &ModelConfig::default_for(Algorithm::Gbt, 0)).unwrap();
        let ranking = importance(&model).unwrap();
        assert_eq!(ranking.entries[0].0, "f1");
        assert!(ranking.entries[0].1 > ranking.entries[1].1);
        let total: f64 = ranking.entries.iter().map(|e| e.1).sum();
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn single_feature_importance_is_one() {
        let ds = separable(9);
        let single = ablate(&ds, &["b"]).unwrap();
        let model = train(&single, &ModelConfig::default_for(Algorithm::Gbt, 0)).unwrap();
        let ranking = importance(&model).unwrap();
        assert_eq!(ranking.entries, vec![("a".to_string(), 1.0)]);
    }

    #[test]
    fn splitless_ensemble_is_flagged() {
        let ds = separable(10);
        let mut model = train(&ds, &ModelConfig::default_for(Algorithm::Gbt, 0)).unwrap();
        if let Parameters::Boosted { trees, .. } = &mut model.parameters {
            for t in trees.iter_mut() {
                t.nodes.truncate(1);
                t.nodes[0].feature = None;
            }
        }
        let ranking = importance(&model).unwrap();
        assert!(ranking.all_zero);
        assert!(ranking.entries.iter().all(|e| e.1 == 0.0));
    }

    #[test]
    fn importance_requires_gbt() {
        let ds = separable(11);
        let model = train(&ds, &ModelConfig::default_for(Algorithm::Forest, 0)).unwrap();
        assert!(matches!(importance(&model), Err(Error::Usage(_))));
    }

    #[test]
    fn invalid_configs_are_rejected() {
        let bad = ModelConfig::Gbt(GbtParams {
            learning_rate: 0.0,
            ..GbtParams::default()
        });
        assert!(bad.validate().is_err());
        let bad = ModelConfig::Forest(ForestParams {
            max_depth: 0,
            ..ForestParams::default()
        });
        assert!(bad.validate().is_err());
    }

    #[test]
    fn model_json_round_trips() {
        let ds = separable(12);
        let dir = tempfile::tempdir().unwrap();
        for algo in Algorithm::ALL {
            let model = train(&ds, &ModelConfig::default_for(algo, 2)).unwrap();
            let path = dir.path().join(format!("{algo}.json"));
            model.save(&path).unwrap();
            let back = TrainedModel::load(&path).unwrap();
            assert_eq!(predict(&back, &ds).unwrap(), predict(&model, &ds).unwrap());
        }
    }
}
