//! Dataset ingestion, preprocessing, and the labeled/unlabeled splits that
//! define a novel class discovery problem.

mod bundle;
mod csv_io;
mod manifest;
mod preprocess;
mod sealed;
mod split;
mod synth;

pub use bundle::{load_bundle, write_bundle, PreparedDataset};
pub use csv_io::{load_csv, load_csv_with, save_csv, CsvEncoder};
pub use manifest::DatasetManifest;
pub use preprocess::{remove_columns, standardize, StandardizeStats};
pub use sealed::{EvalGate, SealedLabels};
pub use split::{hide_classes, split_known_novel, split_known_novel_by_name, train_test_split};
pub use synth::{make_blobs, BlobSpec};

use crate::{NcdError, Result};
use ndarray::Array2;

/// Column layout of a raw CSV file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FeatureSchema {
    /// Feature columns in file order, each numeric or categorical.
    pub columns: Vec<(String, ColumnKind)>,
    pub label_column: String,
    /// Whether the file starts with a header row naming the columns.
    pub has_header: bool,
    /// For headerless files: which file column holds the label
    /// (default: the last one).
    pub label_index: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ColumnKind {
    Numeric,
    Categorical,
}

impl FeatureSchema {
    pub fn new(
        columns: Vec<(String, ColumnKind)>,
        label_column: impl Into<String>,
    ) -> Result<Self> {
        let label_column = label_column.into();
        let mut names: Vec<&str> = columns.iter().map(|(n, _)| n.as_str()).collect();
        names.push(&label_column);
        let mut sorted = names.clone();
        sorted.sort_unstable();
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return Err(NcdError::Schema("duplicate column name".into()));
        }
        Ok(FeatureSchema {
            columns,
            label_column,
            has_header: true,
            label_index: None,
        })
    }

    pub fn without_header(mut self) -> Self {
        self.has_header = false;
        self
    }

    pub fn with_label_index(mut self, index: usize) -> Self {
        self.label_index = Some(index);
        self
    }

    /// All-numeric schema with generated column names, for headerless files.
    pub fn numeric(n_features: usize, label_column: impl Into<String>) -> Result<Self> {
        let columns = (0..n_features)
            .map(|i| (format!("f{i}"), ColumnKind::Numeric))
            .collect();
        FeatureSchema::new(columns, label_column)
    }
}

/// An in-memory table of instances, optionally labeled.
///
/// Labels, when present, are contiguous integers indexing `class_names`.
/// Feature values are always finite.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub x: Array2<f64>,
    pub y: Option<Vec<usize>>,
    pub feature_names: Vec<String>,
    pub class_names: Vec<String>,
    /// Marks columns that came from one-hot expansion; standardization
    /// leaves them untouched.
    pub onehot_mask: Vec<bool>,
}

impl Dataset {
    pub fn new(
        x: Array2<f64>,
        y: Option<Vec<usize>>,
        feature_names: Vec<String>,
        class_names: Vec<String>,
    ) -> Result<Self> {
        let onehot_mask = vec![false; x.ncols()];
        Dataset::with_onehot(x, y, feature_names, class_names, onehot_mask)
    }

    pub fn with_onehot(
        x: Array2<f64>,
        y: Option<Vec<usize>>,
        feature_names: Vec<String>,
        class_names: Vec<String>,
        onehot_mask: Vec<bool>,
    ) -> Result<Self> {
        if feature_names.len() != x.ncols() {
            return Err(NcdError::invalid(format!(
                "{} feature names for {} columns",
                feature_names.len(),
                x.ncols()
            )));
        }
        if onehot_mask.len() != x.ncols() {
            return Err(NcdError::invalid("one-hot mask length mismatch"));
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(NcdError::invalid("non-finite feature value"));
        }
        if let Some(labels) = &y {
            if labels.len() != x.nrows() {
                return Err(NcdError::invalid(format!(
                    "{} labels for {} rows",
                    labels.len(),
                    x.nrows()
                )));
            }
            if let Some(&bad) = labels.iter().find(|&&l| l >= class_names.len()) {
                return Err(NcdError::invalid(format!(
                    "label {bad} out of range for {} classes",
                    class_names.len()
                )));
            }
        }
        Ok(Dataset {
            x,
            y,
            feature_names,
            class_names,
            onehot_mask,
        })
    }

    pub fn n(&self) -> usize {
        self.x.nrows()
    }

    pub fn d(&self) -> usize {
        self.x.ncols()
    }

    pub fn labels(&self) -> Result<&[usize]> {
        self.y
            .as_deref()
            .ok_or_else(|| NcdError::invalid("dataset has no labels"))
    }

    /// Rows whose index passes the filter, preserving order.
    pub(crate) fn select_rows(&self, keep: &[usize]) -> Dataset {
        let x = self.x.select(ndarray::Axis(0), keep);
        let y = self
            .y
            .as_ref()
            .map(|labels| keep.iter().map(|&i| labels[i]).collect());
        Dataset {
            x,
            y,
            feature_names: self.feature_names.clone(),
            class_names: self.class_names.clone(),
            onehot_mask: self.onehot_mask.clone(),
        }
    }
}

/// The labeled/unlabeled decomposition of a dataset for class discovery.
///
/// The unlabeled side's ground-truth labels travel sealed: regular pipeline
/// code cannot read them, only evaluation code that opens the gate.
#[derive(Debug, Clone)]
pub struct NCDSplit {
    /// Known-class instances with open labels `0..c_l`.
    pub labeled: Dataset,
    /// Novel-class instances; `y` is `None`.
    pub unlabeled: Dataset,
    /// Ground truth for `unlabeled` rows, ids `c_l..`, evaluation only.
    pub sealed_novel_labels: SealedLabels,
    /// Known classes moved to the unlabeled side by [`hide_classes`],
    /// with labels kept open for fold scoring.
    pub hidden: Option<Dataset>,
    pub c_l: usize,
    pub c_u_true: Option<usize>,
}

impl NCDSplit {
    pub fn n_labeled(&self) -> usize {
        self.labeled.n()
    }

    pub fn n_unlabeled(&self) -> usize {
        self.unlabeled.n()
    }
}
