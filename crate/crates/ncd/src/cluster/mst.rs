//! Longest edge of the Euclidean minimum spanning tree.
//!
//! The MST minimizes the largest edge over all spanning trees, so its longest
//! edge is unique even when several MSTs exist. Prim's algorithm over the
//! dense distance matrix runs in O(n^2) which is fine at the sizes the
//! spectral pipeline feeds it.

use ndarray::ArrayView2;

use crate::error::{NcdError, Result};

/// Longest edge of the minimum spanning tree over the rows of `x`, returned
/// as the Euclidean length and the endpoint indices. A dataset consisting of
/// duplicates only yields length zero, which downstream bandwidth selection
/// rejects.
pub fn mst_longest_edge(x: ArrayView2<f64>) -> Result<(f64, (usize, usize))> {
    let n = x.nrows();
    if n < 2 {
        return Err(NcdError::invalid(
            "minimum spanning tree needs at least two points",
        ));
    }
    let (d2, edge) = prim_core(n, |i, buf| {
        let xi = x.row(i);
        for (j, slot) in buf.iter_mut().enumerate() {
            let xj = x.row(j);
            *slot = xi
                .iter()
                .zip(xj.iter())
                .map(|(a, b)| (a - b) * (a - b))
                .sum();
        }
    });
    Ok((d2.sqrt(), edge))
}

/// Same as [`mst_longest_edge`] but over a precomputed squared-distance
/// matrix, so the spectral pipeline reuses its one distance computation.
pub(crate) fn mst_longest_edge_from_d2(d2: &ndarray::Array2<f64>) -> Result<(f64, (usize, usize))> {
    let n = d2.nrows();
    if n < 2 {
        return Err(NcdError::invalid(
            "minimum spanning tree needs at least two points",
        ));
    }
    let (max_d2, edge) = prim_core(n, |i, buf| {
        buf.copy_from_slice(d2.row(i).as_slice().expect("contiguous row"));
    });
    Ok((max_d2.sqrt(), edge))
}

/// Prim over an implicit dense graph. `row_d2(i, buf)` must fill `buf` with
/// squared distances from vertex `i` to every vertex. Returns the largest
/// squared edge weight in the tree and its endpoints.
fn prim_core(n: usize, row_d2: impl Fn(usize, &mut [f64])) -> (f64, (usize, usize)) {
    let mut best_d2 = vec![f64::INFINITY; n];
    let mut parent = vec![0usize; n];
    let mut in_tree = vec![false; n];
    let mut buf = vec![0.0f64; n];

    in_tree[0] = true;
    row_d2(0, &mut buf);
    for j in 1..n {
        best_d2[j] = buf[j];
    }

    let mut longest = 0.0f64;
    let mut longest_edge = (0usize, 0usize);
    for _ in 1..n {
        let mut pick = usize::MAX;
        let mut pick_d2 = f64::INFINITY;
        for j in 0..n {
            if !in_tree[j] && best_d2[j] < pick_d2 {
                pick = j;
                pick_d2 = best_d2[j];
            }
        }
        in_tree[pick] = true;
        if pick_d2 >= longest {
            longest = pick_d2;
            longest_edge = (parent[pick].min(pick), parent[pick].max(pick));
        }
        row_d2(pick, &mut buf);
        for j in 0..n {
            if !in_tree[j] && buf[j] < best_d2[j] {
                best_d2[j] = buf[j];
                parent[j] = pick;
            }
        }
    }
    (longest, longest_edge)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use ndarray::{array, Array2};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn three_collinear_points() {
        let x = array![[0.0], [1.0], [5.0]];
        let (d_max, edge) = mst_longest_edge(x.view()).unwrap();
        assert_abs_diff_eq!(d_max, 4.0, epsilon = 1e-12);
        assert_eq!(edge, (1, 2));
    }

    #[test]
    fn two_points_give_their_distance() {
        let x = array![[0.0, 0.0], [3.0, 4.0]];
        let (d_max, edge) = mst_longest_edge(x.view()).unwrap();
        assert_abs_diff_eq!(d_max, 5.0, epsilon = 1e-12);
        assert_eq!(edge, (0, 1));
    }

    #[test]
    fn duplicates_only_yield_zero() {
        let x = array![[2.0, 2.0], [2.0, 2.0], [2.0, 2.0]];
        let (d_max, _) = mst_longest_edge(x.view()).unwrap();
        assert_eq!(d_max, 0.0);
    }

    #[test]
    fn single_point_is_rejected() {
        let x = array![[1.0]];
        assert!(mst_longest_edge(x.view()).is_err());
    }

    #[test]
    fn matches_exhaustive_spanning_tree_enumeration() {
        // Enumerate all 7^5 labeled spanning trees of K7 through their
        // sequence encoding; the minimum-weight tree's longest edge is the
        // oracle for Prim's answer, and the minimax property says no tree
        // at all has a smaller maximum edge.
        let n = 7usize;
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let mut x = Array2::<f64>::zeros((n, 2));
        for v in x.iter_mut() {
            *v = rng.random_range(-1.0..1.0);
        }
        let dist = |a: usize, b: usize| -> f64 {
            ((x[[a, 0]] - x[[b, 0]]).powi(2) + (x[[a, 1]] - x[[b, 1]]).powi(2)).sqrt()
        };

        let mut best_total = f64::INFINITY;
        let mut best_longest = f64::INFINITY;
        let mut min_bottleneck = f64::INFINITY;
        let mut seq = vec![0usize; n - 2];
        loop {
            let edges = decode_tree(&seq, n);
            let mut total = 0.0;
            let mut longest = 0.0f64;
            for &(a, b) in &edges {
                let d = dist(a, b);
                total += d;
                longest = longest.max(d);
            }
            min_bottleneck = min_bottleneck.min(longest);
            if total < best_total {
                best_total = total;
                best_longest = longest;
            }
            // Advance the base-n counter.
            let mut pos = 0;
            loop {
                if pos == seq.len() {
                    break;
                }
                seq[pos] += 1;
                if seq[pos] < n {
                    break;
                }
                seq[pos] = 0;
                pos += 1;
            }
            if pos == seq.len() {
                break;
            }
        }

        let (d_max, (a, b)) = mst_longest_edge(x.view()).unwrap();
        assert_abs_diff_eq!(d_max, best_longest, epsilon = 1e-12);
        assert_abs_diff_eq!(d_max, min_bottleneck, epsilon = 1e-12);
        assert_abs_diff_eq!(dist(a, b), d_max, epsilon = 1e-12);
    }

    /// Decode a length n-2 sequence over {0..n-1} into its labeled tree.
    fn decode_tree(seq: &[usize], n: usize) -> Vec<(usize, usize)> {
        let mut degree = vec![1usize; n];
        for &s in seq {
            degree[s] += 1;
        }
        let mut edges = Vec::with_capacity(n - 1);
        for &s in seq {
            let leaf = (0..n).find(|&j| degree[j] == 1).unwrap();
            edges.push((leaf, s));
            degree[leaf] -= 1;
            degree[s] -= 1;
        }
        let mut last = (0..n).filter(|&j| degree[j] == 1);
        let u = last.next().unwrap();
        let v = last.next().unwrap();
        edges.push((u, v));
        edges
    }
}
