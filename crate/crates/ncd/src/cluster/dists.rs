use ndarray::{Array1, Array2, ArrayView2};

/// Squared Euclidean distances between all row pairs, via the expansion
/// `|x_i - x_j|^2 = |x_i|^2 + |x_j|^2 - 2 x_i . x_j` so the dominant cost is
/// one matrix product. The result is exactly symmetric with a zero diagonal,
/// and rounding noise is clamped at zero.
pub(crate) fn pairwise_sq_dists(x: ArrayView2<f64>) -> Array2<f64> {
    let n = x.nrows();
    let gram = x.dot(&x.t());
    let norms: Vec<f64> = (0..n).map(|i| gram[[i, i]]).collect();
    let mut d2 = Array2::zeros((n, n));
    for i in 0..n {
        for j in (i + 1)..n {
            let v = (norms[i] + norms[j] - 2.0 * gram[[i, j]]).max(0.0);
            d2[[i, j]] = v;
            d2[[j, i]] = v;
        }
    }
    d2
}

/// Squared Euclidean distances from each row of `x` to each row of `c`
/// (points by centroids), clamped at zero.
pub(crate) fn rect_sq_dists(x: ArrayView2<f64>, c: ArrayView2<f64>) -> Array2<f64> {
    let mut g = x.dot(&c.t());
    let xn = row_sq_norms(x);
    let cn = row_sq_norms(c);
    for (i, mut row) in g.rows_mut().into_iter().enumerate() {
        for (j, v) in row.iter_mut().enumerate() {
            *v = (xn[i] + cn[j] - 2.0 * *v).max(0.0);
        }
    }
    g
}

pub(crate) fn row_sq_norms(x: ArrayView2<f64>) -> Array1<f64> {
    x.rows().into_iter().map(|r| r.dot(&r)).collect()
}
