use std::collections::HashSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ColumnKind {
    Numeric,
    Categorical,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnSpec {
    pub name: String,
    pub kind: ColumnKind,
}

impl ColumnSpec {
    pub fn numeric(name: impl Into<String>) -> Self {
        ColumnSpec {
            name: name.into(),
            kind: ColumnKind::Numeric,
        }
    }

    pub fn categorical(name: impl Into<String>) -> Self {
        ColumnSpec {
            name: name.into(),
            kind: ColumnKind::Categorical,
        }
    }
}

/// A protected-feature declaration. Numeric protected features are grouped
/// through `bins`, a list of strictly increasing cut points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProtectedSpec {
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bins: Option<Vec<f64>>,
}

/// Column layout of a tabular dataset.
///
/// `columns` lists every CSV column, the target included. `dropped` records
/// columns removed by ablation; protected declarations on dropped columns are
/// kept so the evaluation side can still refer to them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Schema {
    pub columns: Vec<ColumnSpec>,
    pub target: String,
    pub positive_label: String,
    #[serde(default)]
    pub protected: Vec<ProtectedSpec>,
    #[serde(default)]
    pub missing_token: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub dropped: Vec<String>,
}

impl Schema {
    pub fn from_json_str(text: &str) -> Result<Schema> {
        let schema: Schema = serde_json::from_str(text)?;
        schema.validate()?;
        Ok(schema)
    }

    pub fn from_json_file(path: impl AsRef<Path>) -> Result<Schema> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Schema::from_json_str(&text)
    }

    pub fn validate(&self) -> Result<()> {
        let mut seen = HashSet::new();
        for c in &self.columns {
            if !seen.insert(c.name.as_str()) {
                return Err(Error::Schema(format!("duplicate column name '{}'", c.name)));
            }
        }
        if !seen.contains(self.target.as_str()) {
            return Err(Error::Schema(format!(
                "target column '{}' is not among the columns",
                self.target
            )));
        }
        for p in &self.protected {
            if p.name == self.target {
                return Err(Error::Schema(format!(
                    "target column '{}' cannot be protected",
                    p.name
                )));
            }
            if !seen.contains(p.name.as_str()) && !self.dropped.contains(&p.name) {
                return Err(Error::Schema(format!(
                    "protected column '{}' is not among the columns",
                    p.name
                )));
            }
            if let Some(cuts) = &p.bins {
                BinningSpec::new(cuts.clone())?;
            }
        }
        Ok(())
    }

    pub fn column(&self, name: &str) -> Option<&ColumnSpec> {
        self.columns.iter().find(|c| c.name == name)
    }

    /// Every column except the target, in declaration order.
    pub fn features(&self) -> impl Iterator<Item = &ColumnSpec> {
        self.columns.iter().filter(move |c| c.name != self.target)
    }

    pub fn protected_spec(&self, name: &str) -> Option<&ProtectedSpec> {
        self.protected.iter().find(|p| p.name == name)
    }

    pub fn is_protected(&self, name: &str) -> bool {
        self.protected_spec(name).is_some()
    }
}

/// Cut points `c0 < c1 < ...` producing the bins `(-inf, c0]`, `(c0, c1]`,
/// ..., `(c_last, inf)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinningSpec {
    cuts: Vec<f64>,
}

impl BinningSpec {
    pub fn new(cuts: Vec<f64>) -> Result<Self> {
        if cuts.is_empty() {
            return Err(Error::Schema("binning needs at least one cut point".into()));
        }
        if cuts.iter().any(|c| !c.is_finite()) {
            return Err(Error::Schema("binning cut points must be finite".into()));
        }
        if cuts.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Schema(format!(
                "binning cut points must be strictly increasing, got {cuts:?}"
            )));
        }
        Ok(BinningSpec { cuts })
    }

    /// Age groups `xx-40`, `41-70`, `71-xx`.
    pub fn default_age() -> Self {
        BinningSpec {
            cuts: vec![40.0, 70.0],
        }
    }

    pub fn cuts(&self) -> &[f64] {
        &self.cuts
    }

    pub fn bin_count(&self) -> usize {
        self.cuts.len() + 1
    }

    pub fn bin_of(&self, x: f64) -> usize {
        self.cuts.iter().take_while(|&&c| x > c).count()
    }

    /// Display labels. Integral cuts read as inclusive integer ranges
    /// (`xx-40`, `41-70`, `71-xx`); otherwise interval notation is used.
    pub fn labels(&self) -> Vec<String> {
        let integral = self.cuts.iter().all(|c| c.fract() == 0.0);
        let n = self.cuts.len();
        (0..=n)
            .map(|i| {
                if integral {
                    let lo = if i == 0 {
                        "xx".to_string()
                    } else {
                        format!("{}", self.cuts[i - 1] + 1.0)
                    };
                    let hi = if i == n {
                        "xx".to_string()
                    } else {
                        format!("{}", self.cuts[i])
                    };
                    format!("{lo}-{hi}")
                } else if i == 0 {
                    format!("<={}", self.cuts[0])
                } else if i == n {
                    format!(">{}", self.cuts[n - 1])
                } else {
                    format!("({},{}]", self.cuts[i - 1], self.cuts[i])
                }
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn schema_json() -> &'static str {
        r#"{
            "columns": [
                {"name": "age", "kind": "numeric"},
                {"name": "gender", "kind": "categorical"},
                {"name": "y", "kind": "categorical"}
            ],
            "target": "y",
            "positive_label": "yes",
            "protected": [{"name": "age", "bins": [40, 70]}, {"name": "gender"}]
        }"#
    }

    #[test]
    fn parses_schema_document() {
        let s = Schema::from_json_str(schema_json()).unwrap();
        assert_eq!(s.columns.len(), 3);
        assert_eq!(s.features().count(), 2);
        assert_eq!(s.protected_spec("age").unwrap().bins, Some(vec![40.0, 70.0]));
        assert_eq!(s.missing_token, "");
    }

    #[test]
    fn rejects_duplicates_and_unknown_protected() {
        let dup = schema_json().replace("\"gender\", \"kind\"", "\"age\", \"kind\"");
        assert!(matches!(Schema::from_json_str(&dup), Err(Error::Schema(_))));
        let bad = schema_json().replace("{\"name\": \"gender\"}", "{\"name\": \"race\"}");
        assert!(matches!(Schema::from_json_str(&bad), Err(Error::Schema(_))));
        let target_protected = schema_json().replace("{\"name\": \"gender\"}", "{\"name\": \"y\"}");
        assert!(Schema::from_json_str(&target_protected).is_err());
    }

    #[test]
    fn default_age_bins() {
        let b = BinningSpec::default_age();
        assert_eq!(b.labels(), vec!["xx-40", "41-70", "71-xx"]);
        assert_eq!(b.bin_of(12.0), 0);
        assert_eq!(b.bin_of(40.0), 0);
        assert_eq!(b.bin_of(41.0), 1);
        assert_eq!(b.bin_of(70.0), 1);
        assert_eq!(b.bin_of(80.0), 2);
    }

    #[test]
    fn binning_rejects_unsorted_cuts() {
        assert!(BinningSpec::new(vec![5.0, 5.0]).is_err());
        assert!(BinningSpec::new(vec![]).is_err());
        let b = BinningSpec::new(vec![0.5, 1.5]).unwrap();
        assert_eq!(b.labels(), vec!["<=0.5", "(0.5,1.5]", ">1.5"]);
    }
}
