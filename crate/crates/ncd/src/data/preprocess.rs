use super::Dataset;
use crate::{NcdError, Result};
use ndarray::Array2;

/// Per-column centering and scaling parameters fitted on one dataset and
/// reusable on another (fit on train, apply to test).
#[derive(Debug, Clone, PartialEq)]
pub struct StandardizeStats {
    pub means: Vec<f64>,
    /// Divisors; 1.0 for one-hot and zero-variance columns.
    pub stds: Vec<f64>,
    /// Columns whose variance was (numerically) zero at fit time. They are
    /// mean-centered only, so fit data maps to 0. Not an error: callers that
    /// want them gone drop them explicitly.
    pub zero_variance: Vec<usize>,
}

/// Rescales numeric columns to mean 0 and population (1/n) standard
/// deviation 1 with respect to the fitting set. One-hot columns pass through
/// untouched. With `stats` given, applies them instead of fitting.
pub fn standardize(
    ds: &Dataset,
    stats: Option<&StandardizeStats>,
) -> Result<(Dataset, StandardizeStats)> {
    let d = ds.d();
    let stats = match stats {
        Some(s) => {
            if s.means.len() != d || s.stds.len() != d {
                return Err(NcdError::invalid(format!(
                    "stats cover {} columns, dataset has {d}",
                    s.means.len()
                )));
            }
            s.clone()
        }
        None => fit(ds),
    };

    let mut x = ds.x.clone();
    for (c, mut col) in x.columns_mut().into_iter().enumerate() {
        let (m, s) = (stats.means[c], stats.stds[c]);
        if m == 0.0 && s == 1.0 {
            continue;
        }
        col.mapv_inplace(|v| (v - m) / s);
    }
    let out = Dataset {
        x,
        y: ds.y.clone(),
        feature_names: ds.feature_names.clone(),
        class_names: ds.class_names.clone(),
        onehot_mask: ds.onehot_mask.clone(),
    };
    Ok((out, stats))
}

fn fit(ds: &Dataset) -> StandardizeStats {
    let n = ds.n() as f64;
    let d = ds.d();
    let mut means = vec![0.0; d];
    let mut stds = vec![1.0; d];
    let mut zero_variance = Vec::new();
    for (c, col) in ds.x.columns().into_iter().enumerate() {
        if ds.onehot_mask[c] {
            continue;
        }
        let mean = col.sum() / n;
        let var = col.iter().map(|&v| (v - mean) * (v - mean)).sum::<f64>() / n;
        let std = var.sqrt();
        means[c] = mean;
        if std <= 1e-12 * (1.0 + mean.abs()) {
            zero_variance.push(c);
        } else {
            stds[c] = std;
        }
    }
    StandardizeStats {
        means,
        stds,
        zero_variance,
    }
}

/// Copies a dataset without the given columns (e.g. zero-variance ones).
pub fn remove_columns(ds: &Dataset, drop: &[usize]) -> Result<Dataset> {
    if let Some(&bad) = drop.iter().find(|&&c| c >= ds.d()) {
        return Err(NcdError::invalid(format!("column {bad} out of range")));
    }
    let keep: Vec<usize> = (0..ds.d()).filter(|c| !drop.contains(c)).collect();
    if keep.is_empty() {
        return Err(NcdError::invalid("cannot drop every column"));
    }
    let mut x = Array2::zeros((ds.n(), keep.len()));
    for (new_c, &old_c) in keep.iter().enumerate() {
        x.column_mut(new_c).assign(&ds.x.column(old_c));
    }
    Ok(Dataset {
        x,
        y: ds.y.clone(),
        feature_names: keep.iter().map(|&c| ds.feature_names[c].clone()).collect(),
        class_names: ds.class_names.clone(),
        onehot_mask: keep.iter().map(|&c| ds.onehot_mask[c]).collect(),
    })
}
