//! Does hidden-class performance predict novel-class performance?
//!
//! The tuning protocol selects combos by scores on artificially hidden known
//! classes. Whether that proxy is trustworthy is an empirical question, so
//! this report pairs each combo's hidden-class ARI with its eventual
//! novel-class ARI and summarizes the relationship with a rank correlation.

use serde::Serialize;

use crate::{NcdError, Result};

/// Paired scores and their Spearman rank correlation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorrelationReport {
    /// `(ari_hidden, ari_novel)` per combo, in input order.
    pub pairs: Vec<(f64, f64)>,
    pub spearman: f64,
}

/// Builds the report from two parallel score slices (element `i` of each
/// belongs to the same combo). Ties get average ranks. Errors on length
/// mismatch, fewer than two pairs, non-finite scores, or a constant slice
/// (whose ranks carry no order to correlate).
pub fn correlation_report(
    ari_hidden: &[f64],
    ari_novel: &[f64],
) -> Result<CorrelationReport> {
    if ari_hidden.len() != ari_novel.len() {
        return Err(NcdError::invalid(format!(
            "{} hidden scores but {} novel scores",
            ari_hidden.len(),
            ari_novel.len()
        )));
    }
    if ari_hidden.len() < 2 {
        return Err(NcdError::invalid("need at least two combos to correlate"));
    }
    if ari_hidden.iter().chain(ari_novel).any(|v| !v.is_finite()) {
        return Err(NcdError::Numeric("non-finite score in correlation input".into()));
    }
    let ra = average_ranks(ari_hidden);
    let rb = average_ranks(ari_novel);
    let spearman = pearson(&ra, &rb)?;
    let pairs = ari_hidden.iter().copied().zip(ari_novel.iter().copied()).collect();
    Ok(CorrelationReport { pairs, spearman })
}

/// 1-based ranks; runs of equal values share their average rank.
fn average_ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).expect("finite by validation"));
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        // Positions i..=j (0-based) hold one tied run.
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &idx in &order[i..=j] {
            ranks[idx] = avg;
        }
        i = j + 1;
    }
    ranks
}

fn pearson(a: &[f64], b: &[f64]) -> Result<f64> {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let mut cov = 0.0;
    let mut va = 0.0;
    let mut vb = 0.0;
    for (&x, &y) in a.iter().zip(b) {
        cov += (x - ma) * (y - mb);
        va += (x - ma).powi(2);
        vb += (y - mb).powi(2);
    }
    if va == 0.0 || vb == 0.0 {
        return Err(NcdError::Numeric(
            "a score slice is constant; rank correlation is undefined".into(),
        ));
    }
    Ok(cov / (va * vb).sqrt())
}
