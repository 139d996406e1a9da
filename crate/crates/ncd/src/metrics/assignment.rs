use crate::{NcdError, Result};

/// Maximum-profit one-to-one assignment between the rows and columns of a
/// rectangular profit matrix.
///
/// Returns the matched `(row, col)` pairs, `min(rows, cols)` of them, together
/// with the total profit of the matching. The matrix is zero-padded to square
/// internally, so unmatched rows or columns contribute nothing.
///
/// Runs the O(n^3) potential-based shortest-augmenting-path method on the
/// negated profits. Ties are resolved deterministically (first minimum).
pub fn assignment_max(profit: &[Vec<f64>]) -> Result<(Vec<(usize, usize)>, f64)> {
    let r = profit.len();
    if r == 0 {
        return Err(NcdError::invalid("empty profit matrix"));
    }
    let c = profit[0].len();
    if c == 0 {
        return Err(NcdError::invalid("profit matrix has zero columns"));
    }
    if profit.iter().any(|row| row.len() != c) {
        return Err(NcdError::invalid("ragged profit matrix"));
    }
    if profit
        .iter()
        .any(|row| row.iter().any(|v| !v.is_finite()))
    {
        return Err(NcdError::invalid("non-finite profit entry"));
    }

    let n = r.max(c);
    // Minimization on cost = -profit; padding cells cost 0 (profit 0).
    let cost = |i: usize, j: usize| -> f64 {
        if i < r && j < c {
            -profit[i][j]
        } else {
            0.0
        }
    };

    // Potentials u (rows), v (cols); p[j] = row matched to column j.
    // Index 0 is the sentinel, real indices are 1..=n.
    let mut u = vec![0.0f64; n + 1];
    let mut v = vec![0.0f64; n + 1];
    let mut p = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];

    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0usize;
        let mut minv = vec![f64::INFINITY; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0usize;
            for j in 1..=n {
                if used[j] {
                    continue;
                }
                let cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }

    let mut pairs = Vec::with_capacity(r.min(c));
    let mut total = 0.0;
    for j in 1..=n {
        let i = p[j];
        if i >= 1 && i <= r && j <= c {
            pairs.push((i - 1, j - 1));
            total += profit[i - 1][j - 1];
        }
    }
    pairs.sort_unstable();
    Ok((pairs, total))
}
