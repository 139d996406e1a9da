use super::{Dataset, NCDSplit, SealedLabels, StandardizeStats};
use crate::{NcdError, Result};
use ndarray::Array2;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::collections::BTreeMap;
use std::path::Path;

/// A dataset after preparation: parsed, standardized, split into the
/// labeled/unlabeled sides, with a held-out test set in the same label space.
#[derive(Debug, Clone)]
pub struct PreparedDataset {
    pub name: String,
    pub split: NCDSplit,
    /// Test instances covering known and novel classes, labels open
    /// (used only for reporting).
    pub test: Dataset,
    /// Standardization fitted on the training side, already applied.
    pub stats: StandardizeStats,
    /// Names of zero-variance columns removed during preparation.
    pub dropped_columns: Vec<String>,
}

#[derive(Serialize, Deserialize)]
struct BundleMeta {
    name: String,
    c_l: usize,
    c_u: Option<usize>,
    n_labeled: usize,
    n_unlabeled: usize,
    n_test: usize,
    feature_names: Vec<String>,
    /// Full label space: known classes first, then novel.
    class_names: Vec<String>,
    onehot_mask: Vec<bool>,
    dropped_columns: Vec<String>,
    means: Vec<f64>,
    stds: Vec<f64>,
    checksums: BTreeMap<String, String>,
}

const FILES: [&str; 4] = [
    "labeled.csv",
    "unlabeled.csv",
    "unlabeled_labels.csv",
    "test.csv",
];

/// Writes a prepared dataset as a directory of CSV files plus a `bundle.toml`
/// carrying the metadata and a SHA-256 checksum per file.
pub fn write_bundle(prep: &PreparedDataset, dir: impl AsRef<Path>) -> Result<()> {
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir)?;

    let split = &prep.split;
    write_matrix(
        &dir.join("labeled.csv"),
        &split.labeled.x,
        &split.labeled.feature_names,
        Some(split.labeled.labels()?),
    )?;
    write_matrix(
        &dir.join("unlabeled.csv"),
        &split.unlabeled.x,
        &split.unlabeled.feature_names,
        None,
    )?;
    write_labels(
        &dir.join("unlabeled_labels.csv"),
        split.sealed_novel_labels.raw_for_persistence(),
    )?;
    write_matrix(
        &dir.join("test.csv"),
        &prep.test.x,
        &prep.test.feature_names,
        Some(prep.test.labels()?),
    )?;

    let mut checksums = BTreeMap::new();
    for file in FILES {
        checksums.insert(file.to_string(), sha256_hex(&dir.join(file))?);
    }
    let meta = BundleMeta {
        name: prep.name.clone(),
        c_l: split.c_l,
        c_u: split.c_u_true,
        n_labeled: split.labeled.n(),
        n_unlabeled: split.unlabeled.n(),
        n_test: prep.test.n(),
        feature_names: split.unlabeled.feature_names.clone(),
        class_names: split.unlabeled.class_names.clone(),
        onehot_mask: split.unlabeled.onehot_mask.clone(),
        dropped_columns: prep.dropped_columns.clone(),
        means: prep.stats.means.clone(),
        stds: prep.stats.stds.clone(),
        checksums,
    };
    let text = toml::to_string_pretty(&meta).map_err(|e| NcdError::Schema(e.to_string()))?;
    std::fs::write(dir.join("bundle.toml"), text)?;
    Ok(())
}

/// Loads a bundle directory, verifying every file checksum before parsing.
/// The unlabeled side's ground truth goes straight into sealed storage.
pub fn load_bundle(dir: impl AsRef<Path>) -> Result<PreparedDataset> {
    let dir = dir.as_ref();
    let meta_path = dir.join("bundle.toml");
    let text = std::fs::read_to_string(&meta_path).map_err(|e| {
        NcdError::MissingSource(format!(
            "{}: {e}; run the prepare step first",
            meta_path.display()
        ))
    })?;
    let meta: BundleMeta =
        toml::from_str(&text).map_err(|e| NcdError::Schema(format!("bundle.toml: {e}")))?;

    for file in FILES {
        let path = dir.join(file);
        let actual = sha256_hex(&path)?;
        let expected = meta
            .checksums
            .get(file)
            .ok_or_else(|| NcdError::Schema(format!("bundle.toml lists no checksum for {file}")))?;
        if &actual != expected {
            return Err(NcdError::ChecksumMismatch {
                path: path.display().to_string(),
                expected: expected.clone(),
                actual,
            });
        }
    }

    let d = meta.feature_names.len();
    let (x_l, y_l) = read_matrix(&dir.join("labeled.csv"), d, true)?;
    let (x_u, _) = read_matrix(&dir.join("unlabeled.csv"), d, false)?;
    let truth = read_labels(&dir.join("unlabeled_labels.csv"))?;
    let (x_t, y_t) = read_matrix(&dir.join("test.csv"), d, true)?;

    if truth.len() != x_u.nrows() {
        return Err(NcdError::Schema(format!(
            "{} ground-truth labels for {} unlabeled rows",
            truth.len(),
            x_u.nrows()
        )));
    }
    if x_l.nrows() != meta.n_labeled || x_u.nrows() != meta.n_unlabeled || x_t.nrows() != meta.n_test
    {
        return Err(NcdError::Schema("bundle row counts disagree with metadata".into()));
    }

    let labeled = Dataset::with_onehot(
        x_l,
        Some(y_l.expect("labeled file has labels")),
        meta.feature_names.clone(),
        meta.class_names[..meta.c_l].to_vec(),
        meta.onehot_mask.clone(),
    )?;
    let unlabeled = Dataset::with_onehot(
        x_u,
        None,
        meta.feature_names.clone(),
        meta.class_names.clone(),
        meta.onehot_mask.clone(),
    )?;
    let test = Dataset::with_onehot(
        x_t,
        Some(y_t.expect("test file has labels")),
        meta.feature_names.clone(),
        meta.class_names.clone(),
        meta.onehot_mask.clone(),
    )?;

    Ok(PreparedDataset {
        name: meta.name,
        split: NCDSplit {
            labeled,
            unlabeled,
            sealed_novel_labels: SealedLabels::seal(truth),
            hidden: None,
            c_l: meta.c_l,
            c_u_true: meta.c_u,
        },
        test,
        stats: StandardizeStats {
            means: meta.means,
            stds: meta.stds,
            zero_variance: vec![],
        },
        dropped_columns: meta.dropped_columns,
    })
}

fn write_matrix(
    path: &Path,
    x: &Array2<f64>,
    feature_names: &[String],
    labels: Option<&[usize]>,
) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    let mut header: Vec<String> = feature_names.to_vec();
    if labels.is_some() {
        header.push("label".into());
    }
    w.write_record(&header)?;
    for (i, row) in x.rows().into_iter().enumerate() {
        let mut record: Vec<String> = row.iter().map(|v| format!("{v}")).collect();
        if let Some(y) = labels {
            record.push(y[i].to_string());
        }
        w.write_record(&record)?;
    }
    w.flush()?;
    Ok(())
}

fn read_matrix(path: &Path, d: usize, labeled: bool) -> Result<(Array2<f64>, Option<Vec<usize>>)> {
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_path(path)?;
    let mut values = Vec::new();
    let mut labels = Vec::new();
    let mut n = 0usize;
    let width = if labeled { d + 1 } else { d };
    for (i, record) in reader.records().enumerate() {
        let record = record?;
        if record.len() != width {
            return Err(NcdError::Parse {
                path: path.display().to_string(),
                row: i + 1,
                message: format!("expected {width} columns, found {}", record.len()),
            });
        }
        for c in 0..d {
            let v: f64 = record[c].parse().map_err(|_| NcdError::Parse {
                path: path.display().to_string(),
                row: i + 1,
                message: format!("bad float `{}`", &record[c]),
            })?;
            values.push(v);
        }
        if labeled {
            let l: usize = record[d].parse().map_err(|_| NcdError::Parse {
                path: path.display().to_string(),
                row: i + 1,
                message: format!("bad label `{}`", &record[d]),
            })?;
            labels.push(l);
        }
        n += 1;
    }
    let x = Array2::from_shape_vec((n, d), values).expect("consistent shape");
    Ok((x, labeled.then_some(labels)))
}

fn write_labels(path: &Path, labels: &[usize]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["label"])?;
    for l in labels {
        w.write_record([l.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

fn read_labels(path: &Path) -> Result<Vec<usize>> {
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_path(path)?;
    let mut labels = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record?;
        labels.push(record[0].parse().map_err(|_| NcdError::Parse {
            path: path.display().to_string(),
            row: i + 1,
            message: format!("bad label `{}`", &record[0]),
        })?);
    }
    Ok(labels)
}

fn sha256_hex(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path)?;
    let digest = Sha256::digest(&bytes);
    Ok(digest.iter().map(|b| format!("{b:02x}")).collect())
}
