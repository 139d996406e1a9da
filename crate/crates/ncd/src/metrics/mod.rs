//! Clustering evaluation: agreement with ground truth (ACC, NMI, ARI) and
//! label-free cluster validity indices (silhouette, Calinski-Harabasz,
//! Davies-Bouldin, Dunn, kneedle elbow detection).

mod agreement;
mod assignment;
mod cvi;
mod kneedle;

pub use agreement::{ari, clustering_accuracy, nmi, score_against_sealed, AgreementScores};
pub use assignment::assignment_max;
pub use cvi::{calinski_harabasz, davies_bouldin, davies_bouldin_flagged, dunn, silhouette};
pub(crate) use cvi::{dunn_from_dists, silhouette_from_dists};
pub use kneedle::kneedle_elbow;

use crate::{NcdError, Result};

/// An integer group assignment over a set of instances.
///
/// Group ids are dense in `[0, k)`. Empty groups are only possible when the
/// producer constructs the partition with an explicit `k` (e.g. a k-means run
/// that lost a cluster would still declare its `k`).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Partition {
    labels: Vec<usize>,
    k: usize,
}

impl Partition {
    /// Builds a partition from arbitrary integer labels by relabeling them
    /// densely in sorted order. Every group is nonempty.
    pub fn from_labels(raw: &[usize]) -> Self {
        let mut distinct: Vec<usize> = raw.to_vec();
        distinct.sort_unstable();
        distinct.dedup();
        let labels = raw
            .iter()
            .map(|l| distinct.binary_search(l).expect("label present"))
            .collect();
        Partition {
            labels,
            k: distinct.len(),
        }
    }

    /// Wraps labels that are already dense in `[0, k)`; `k` may exceed the
    /// number of occupied groups.
    pub fn from_dense(labels: Vec<usize>, k: usize) -> Result<Self> {
        if let Some(&bad) = labels.iter().find(|&&l| l >= k) {
            return Err(NcdError::invalid(format!(
                "label {bad} out of range for k={k}"
            )));
        }
        Ok(Partition { labels, k })
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// Per-group instance counts.
    pub fn group_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0usize; self.k];
        for &l in &self.labels {
            sizes[l] += 1;
        }
        sizes
    }
}

/// Joint count table of two partitions over the same instances.
#[derive(Debug, Clone)]
pub struct ContingencyTable {
    /// counts[i][j] = instances in group i of `a` and group j of `b`.
    pub counts: Vec<Vec<u64>>,
    pub row_marginals: Vec<u64>,
    pub col_marginals: Vec<u64>,
    pub n: u64,
}

impl ContingencyTable {
    pub fn new(a: &Partition, b: &Partition) -> Result<Self> {
        if a.len() != b.len() {
            return Err(NcdError::invalid(format!(
                "partition length mismatch: {} vs {}",
                a.len(),
                b.len()
            )));
        }
        let (r, c) = (a.k(), b.k());
        let mut counts = vec![vec![0u64; c]; r];
        for (&la, &lb) in a.labels().iter().zip(b.labels()) {
            counts[la][lb] += 1;
        }
        let row_marginals: Vec<u64> = counts.iter().map(|row| row.iter().sum()).collect();
        let mut col_marginals = vec![0u64; c];
        for row in &counts {
            for (j, &v) in row.iter().enumerate() {
                col_marginals[j] += v;
            }
        }
        let n = row_marginals.iter().sum();
        Ok(ContingencyTable {
            counts,
            row_marginals,
            col_marginals,
            n,
        })
    }
}
