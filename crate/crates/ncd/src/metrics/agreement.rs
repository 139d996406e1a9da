use super::{assignment_max, ContingencyTable, Partition};
use crate::data::{EvalGate, SealedLabels};
use crate::Result;

/// Agreement of a predicted partition with ground truth.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AgreementScores {
    pub acc: f64,
    pub nmi: f64,
    pub ari: f64,
}

/// Clustering accuracy: the best one-to-one matching between predicted
/// clusters and true classes, as a fraction of all instances.
///
/// When the numbers of clusters differ, only `min` of them can be matched;
/// instances of unmatched predicted clusters count as errors.
pub fn clustering_accuracy(truth: &Partition, pred: &Partition) -> Result<f64> {
    let table = ContingencyTable::new(truth, pred)?;
    let profit: Vec<Vec<f64>> = table
        .counts
        .iter()
        .map(|row| row.iter().map(|&v| v as f64).collect())
        .collect();
    let (_, total) = assignment_max(&profit)?;
    Ok(total / table.n as f64)
}

/// Normalized mutual information with arithmetic-mean normalization:
/// `MI(a, b) / ((H(a) + H(b)) / 2)`.
///
/// Two single-cluster partitions are identical, so that case scores 1.0.
/// If exactly one partition is a single cluster the score is 0.
pub fn nmi(a: &Partition, b: &Partition) -> Result<f64> {
    let table = ContingencyTable::new(a, b)?;
    let n = table.n as f64;

    let entropy = |marginals: &[u64]| -> f64 {
        marginals
            .iter()
            .filter(|&&m| m > 0)
            .map(|&m| {
                let p = m as f64 / n;
                -p * p.ln()
            })
            .sum()
    };
    let ha = entropy(&table.row_marginals);
    let hb = entropy(&table.col_marginals);
    if ha == 0.0 && hb == 0.0 {
        return Ok(1.0);
    }

    let mut mi = 0.0;
    for (i, row) in table.counts.iter().enumerate() {
        for (j, &nij) in row.iter().enumerate() {
            if nij == 0 {
                continue;
            }
            let nij = nij as f64;
            let ai = table.row_marginals[i] as f64;
            let bj = table.col_marginals[j] as f64;
            mi += (nij / n) * ((nij * n) / (ai * bj)).ln();
        }
    }
    Ok((mi / (0.5 * (ha + hb))).clamp(0.0, 1.0))
}

/// Adjusted Rand index via pair counting:
/// `(index - expected) / (max - expected)` over the contingency table.
///
/// Degenerate inputs where `max == expected` (both partitions a single
/// cluster, or both all singletons) are identical partitions and score 1.0.
pub fn ari(a: &Partition, b: &Partition) -> Result<f64> {
    let table = ContingencyTable::new(a, b)?;
    let c2 = |x: u64| -> f64 {
        let x = x as f64;
        x * (x - 1.0) / 2.0
    };

    let index: f64 = table
        .counts
        .iter()
        .flat_map(|row| row.iter())
        .map(|&v| c2(v))
        .sum();
    let sum_a: f64 = table.row_marginals.iter().map(|&v| c2(v)).sum();
    let sum_b: f64 = table.col_marginals.iter().map(|&v| c2(v)).sum();
    let total_pairs = c2(table.n);
    if total_pairs == 0.0 {
        return Ok(1.0);
    }
    let expected = sum_a * sum_b / total_pairs;
    let max = 0.5 * (sum_a + sum_b);
    if max == expected {
        return Ok(1.0);
    }
    Ok((index - expected) / (max - expected))
}

/// Scores a prediction against labels that are sealed from the rest of the
/// pipeline. Only evaluation code constructs the gate that opens them.
pub fn score_against_sealed(sealed: &SealedLabels, pred: &Partition) -> Result<AgreementScores> {
    let truth = Partition::from_labels(sealed.unseal(EvalGate::for_evaluation()));
    Ok(AgreementScores {
        acc: clustering_accuracy(&truth, pred)?,
        nmi: nmi(&truth, pred)?,
        ari: ari(&truth, pred)?,
    })
}
