//! Hidden-class folds: random combinations of known classes to hold out.

use std::collections::BTreeSet;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::seeding::derive_seed;
use crate::{NcdError, Result};

/// One evaluation fold: the known classes to hide and the seed that drives
/// every stochastic step taken while evaluating it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FoldSpec {
    pub fold_id: usize,
    /// Sorted class ids to move to the unlabeled side.
    pub hidden_classes: Vec<usize>,
    /// `derive_seed(master, fold_id)`, so folds can run in parallel.
    pub seed: u64,
}

/// Draws `n_folds` distinct combinations of `n_hid` classes from
/// `known_labels` (set semantics: duplicates and order are ignored).
///
/// When fewer than `n_folds` combinations exist, every combination is used
/// in lexicographic order and a warning reports the reduction. Deterministic
/// per seed. Errors unless `1 <= n_hid < |known_labels|` and `n_folds >= 1`.
pub fn make_folds(
    known_labels: &[usize],
    n_hid: usize,
    n_folds: usize,
    seed: u64,
) -> Result<(Vec<FoldSpec>, Vec<String>)> {
    let classes: Vec<usize> = known_labels.iter().copied().collect::<BTreeSet<_>>().into_iter().collect();
    let m = classes.len();
    if n_hid == 0 || n_hid >= m {
        return Err(NcdError::invalid(format!(
            "need 1 <= hidden classes < known classes, got {n_hid} of {m}"
        )));
    }
    if n_folds == 0 {
        return Err(NcdError::invalid("need at least one fold"));
    }

    let mut warnings = Vec::new();
    let available = n_subsets_capped(m, n_hid, n_folds as u128);
    let subsets = if available <= n_folds as u128 {
        if available < n_folds as u128 {
            warnings.push(format!(
                "only {available} distinct combinations of {n_hid} classes exist; \
                 using all of them instead of {n_folds} folds"
            ));
        }
        all_subsets(&classes, n_hid)
    } else {
        sample_subsets(&classes, n_hid, n_folds, derive_seed(seed, !0))?
    };

    let folds = subsets
        .into_iter()
        .enumerate()
        .map(|(fold_id, hidden_classes)| FoldSpec {
            fold_id,
            hidden_classes,
            seed: derive_seed(seed, fold_id as u64),
        })
        .collect();
    Ok((folds, warnings))
}

/// C(m, k), capped: returns `cap + 1` as soon as the count exceeds `cap`.
fn n_subsets_capped(m: usize, k: usize, cap: u128) -> u128 {
    let k = k.min(m - k);
    let mut c: u128 = 1;
    for i in 0..k {
        // Partial products of C(m, k) are themselves binomials, so the
        // division is exact.
        c = c * (m - i) as u128 / (i + 1) as u128;
        if c > cap {
            return cap + 1;
        }
    }
    c
}

/// Every k-subset of `classes`, lexicographic (classes is sorted).
fn all_subsets(classes: &[usize], k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        out.push(idx.iter().map(|&i| classes[i]).collect());
        // Advance the rightmost index that still has room.
        let mut pos = k;
        while pos > 0 {
            pos -= 1;
            if idx[pos] < classes.len() - (k - pos) {
                idx[pos] += 1;
                for j in pos + 1..k {
                    idx[j] = idx[j - 1] + 1;
                }
                break;
            }
            if pos == 0 {
                return out;
            }
        }
    }
}

/// Rejection-samples `n_folds` distinct sorted k-subsets. The caller
/// guarantees more than `n_folds` subsets exist, so this terminates.
fn sample_subsets(
    classes: &[usize],
    k: usize,
    n_folds: usize,
    seed: u64,
) -> Result<Vec<Vec<usize>>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut seen = BTreeSet::new();
    let mut out = Vec::with_capacity(n_folds);
    let mut attempts = 0usize;
    while out.len() < n_folds {
        attempts += 1;
        if attempts > 1000 + 200 * n_folds {
            return Err(NcdError::Numeric(
                "combination sampling failed to find enough distinct folds".into(),
            ));
        }
        let mut pick: Vec<usize> = rand::seq::index::sample(&mut rng, classes.len(), k)
            .iter()
            .map(|i| classes[i])
            .collect();
        pick.sort_unstable();
        if seen.insert(pick.clone()) {
            out.push(pick);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn samples_distinct_combinations() {
        let (folds, warnings) = make_folds(&[0, 1, 2, 3, 4], 2, 5, 7).unwrap();
        assert!(warnings.is_empty());
        assert_eq!(folds.len(), 5);
        let mut seen = BTreeSet::new();
        for (i, f) in folds.iter().enumerate() {
            assert_eq!(f.fold_id, i);
            assert_eq!(f.hidden_classes.len(), 2);
            assert!(f.hidden_classes[0] < f.hidden_classes[1]);
            assert!(f.hidden_classes.iter().all(|&c| c < 5));
            assert!(seen.insert(f.hidden_classes.clone()), "duplicate fold");
        }
        let seeds: BTreeSet<u64> = folds.iter().map(|f| f.seed).collect();
        assert_eq!(seeds.len(), 5);
    }

    #[test]
    fn exhausts_small_spaces() {
        // C(3, 2) = 3: asking for exactly 3 uses all of them silently.
        let (folds, warnings) = make_folds(&[0, 1, 2], 2, 3, 1).unwrap();
        assert!(warnings.is_empty());
        let subsets: Vec<_> = folds.iter().map(|f| f.hidden_classes.clone()).collect();
        assert_eq!(subsets, vec![vec![0, 1], vec![0, 2], vec![1, 2]]);

        // Asking for more than exist reduces the count and warns.
        let (folds, warnings) = make_folds(&[0, 1, 2], 2, 5, 1).unwrap();
        assert_eq!(folds.len(), 3);
        assert_eq!(warnings.len(), 1);
        assert!(warnings[0].contains("3 distinct combinations"));
    }

    #[test]
    fn label_order_and_duplicates_are_ignored() {
        let a = make_folds(&[4, 2, 0, 1, 3], 2, 5, 11).unwrap();
        let b = make_folds(&[0, 0, 1, 2, 3, 4, 4], 2, 5, 11).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn deterministic_per_seed() {
        let a = make_folds(&[0, 1, 2, 3, 4, 5, 6], 3, 10, 42).unwrap();
        let b = make_folds(&[0, 1, 2, 3, 4, 5, 6], 3, 10, 42).unwrap();
        assert_eq!(a, b);
        let c = make_folds(&[0, 1, 2, 3, 4, 5, 6], 3, 10, 43).unwrap();
        let picks = |f: &(Vec<FoldSpec>, Vec<String>)| {
            f.0.iter().map(|s| s.hidden_classes.clone()).collect::<Vec<_>>()
        };
        assert_ne!(picks(&a), picks(&c));
    }

    #[test]
    fn large_requests_stay_distinct() {
        let known: Vec<usize> = (0..10).collect();
        let (folds, warnings) = make_folds(&known, 3, 20, 5).unwrap();
        assert!(warnings.is_empty());
        let seen: BTreeSet<_> = folds.iter().map(|f| f.hidden_classes.clone()).collect();
        assert_eq!(seen.len(), 20);
    }

    #[test]
    fn rejects_degenerate_requests() {
        assert!(make_folds(&[0, 1, 2], 0, 3, 1).is_err());
        assert!(make_folds(&[0, 1, 2], 3, 3, 1).is_err());
        assert!(make_folds(&[0, 1, 2], 4, 3, 1).is_err());
        assert!(make_folds(&[0, 1, 2], 1, 0, 1).is_err());
    }

    #[test]
    fn counts_combinations_with_cap() {
        assert_eq!(n_subsets_capped(5, 2, 100), 10);
        assert_eq!(n_subsets_capped(3, 2, 100), 3);
        assert_eq!(n_subsets_capped(60, 30, 10), 11);
    }
}
