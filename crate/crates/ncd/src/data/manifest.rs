use super::{ColumnKind, FeatureSchema};
use crate::{NcdError, Result};
use serde::{Deserialize, Serialize};
use std::path::Path;

/// Describes one raw dataset and its class-discovery configuration: where
/// the files come from, how to parse them, which classes play the novel
/// role, and how tuning folds hide known classes.
///
/// This is configuration, not code: the choice of novel classes is an
/// experimental decision recorded here so runs are reproducible.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetManifest {
    pub name: String,
    /// Where the raw files can be obtained (for humans; nothing downloads).
    pub source: String,
    /// Raw file names, resolved relative to the manifest's directory.
    pub train_file: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub test_file: Option<String>,
    #[serde(default)]
    pub has_header: bool,
    pub label_column: String,
    /// File column of the label for headerless files; default: last.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label_index: Option<usize>,
    /// Shortcut for headerless all-numeric files.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_features: Option<usize>,
    /// Explicit column names in file order (alternative to `n_features`).
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub feature_columns: Vec<String>,
    /// Subset of `feature_columns` to one-hot encode.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub categorical_columns: Vec<String>,
    /// Class names (as they appear in the label column) treated as novel.
    pub novel_classes: Vec<String>,
    /// How many known classes each tuning fold hides.
    pub hidden_per_fold: usize,
    pub n_folds: usize,
    /// Used when no predefined test file exists.
    #[serde(default = "default_test_fraction")]
    pub test_fraction: f64,
    #[serde(default)]
    pub split_seed: u64,
    /// Optional stratified cap per class, for very large datasets.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub subsample_per_class: Option<usize>,
    #[serde(default)]
    pub subsample_seed: u64,
}

fn default_test_fraction() -> f64 {
    0.3
}

impl DatasetManifest {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path.as_ref())?;
        let manifest: DatasetManifest = toml::from_str(&text).map_err(|e| {
            NcdError::Schema(format!("{}: {e}", path.as_ref().display()))
        })?;
        manifest.validate()?;
        Ok(manifest)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        self.validate()?;
        let text = toml::to_string_pretty(self)
            .map_err(|e| NcdError::Schema(e.to_string()))?;
        std::fs::write(path, text)?;
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        if self.name.is_empty() {
            return Err(NcdError::Schema("manifest needs a name".into()));
        }
        if self.novel_classes.is_empty() {
            return Err(NcdError::Schema("manifest lists no novel classes".into()));
        }
        match (self.n_features, self.feature_columns.is_empty()) {
            (Some(_), false) => {
                return Err(NcdError::Schema(
                    "give either n_features or feature_columns, not both".into(),
                ))
            }
            (None, true) => {
                return Err(NcdError::Schema(
                    "give n_features or feature_columns".into(),
                ))
            }
            _ => {}
        }
        if let Some(bad) = self
            .categorical_columns
            .iter()
            .find(|c| !self.feature_columns.contains(c))
        {
            return Err(NcdError::Schema(format!(
                "categorical column `{bad}` is not a feature column"
            )));
        }
        if !(self.test_fraction > 0.0 && self.test_fraction < 1.0) {
            return Err(NcdError::Schema("test_fraction must be in (0, 1)".into()));
        }
        if self.n_folds == 0 {
            return Err(NcdError::Schema("n_folds must be positive".into()));
        }
        Ok(())
    }

    pub fn schema(&self) -> Result<FeatureSchema> {
        let mut schema = match self.n_features {
            Some(n) => FeatureSchema::numeric(n, self.label_column.clone())?,
            None => {
                let columns = self
                    .feature_columns
                    .iter()
                    .map(|name| {
                        let kind = if self.categorical_columns.contains(name) {
                            ColumnKind::Categorical
                        } else {
                            ColumnKind::Numeric
                        };
                        (name.clone(), kind)
                    })
                    .collect();
                FeatureSchema::new(columns, self.label_column.clone())?
            }
        };
        schema.has_header = self.has_header;
        schema.label_index = self.label_index;
        Ok(schema)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn minimal() -> DatasetManifest {
        DatasetManifest {
            name: "toy".into(),
            source: "local".into(),
            train_file: "toy.csv".into(),
            test_file: None,
            has_header: false,
            label_column: "class".into(),
            label_index: None,
            n_features: Some(4),
            feature_columns: vec![],
            categorical_columns: vec![],
            novel_classes: vec!["2".into(), "3".into()],
            hidden_per_fold: 1,
            n_folds: 3,
            test_fraction: 0.3,
            split_seed: 0,
            subsample_per_class: None,
            subsample_seed: 0,
        }
    }

    #[test]
    fn toml_round_trip() {
        let m = minimal();
        let f = tempfile::NamedTempFile::new().unwrap();
        m.save(f.path()).unwrap();
        let back = DatasetManifest::load(f.path()).unwrap();
        assert_eq!(m, back);
    }

    #[test]
    fn parses_a_hand_written_manifest() {
        let text = r#"
            name = "digits"
            source = "https://example.org/digits"
            train_file = "digits.tra"
            test_file = "digits.tes"
            label_column = "digit"
            n_features = 16
            novel_classes = ["5", "6", "7", "8", "9"]
            hidden_per_fold = 2
            n_folds = 5
        "#;
        let m: DatasetManifest = toml::from_str(text).unwrap();
        m.validate().unwrap();
        assert!(!m.has_header);
        assert_eq!(m.test_fraction, 0.3);
        assert_eq!(m.novel_classes.len(), 5);
        let schema = m.schema().unwrap();
        assert_eq!(schema.columns.len(), 16);
        assert!(!schema.has_header);
    }

    #[test]
    fn rejects_unknown_fields_and_bad_configs() {
        assert!(toml::from_str::<DatasetManifest>("name = \"x\"\nbogus = 1").is_err());
        let mut m = minimal();
        m.novel_classes.clear();
        assert!(m.validate().is_err());
        let mut m = minimal();
        m.feature_columns = vec!["a".into()];
        assert!(m.validate().is_err());
        let mut m = minimal();
        m.n_features = None;
        assert!(m.validate().is_err());
        let mut m = minimal();
        m.categorical_columns = vec!["ghost".into()];
        m.n_features = None;
        m.feature_columns = vec!["a".into()];
        assert!(m.validate().is_err());
    }

    #[test]
    fn schema_marks_categorical_columns() {
        let mut m = minimal();
        m.n_features = None;
        m.feature_columns = vec!["age".into(), "job".into()];
        m.categorical_columns = vec!["job".into()];
        let schema = m.schema().unwrap();
        assert_eq!(schema.columns[0].1, ColumnKind::Numeric);
        assert_eq!(schema.columns[1].1, ColumnKind::Categorical);
    }
}
