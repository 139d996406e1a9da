use super::Partition;
use crate::{NcdError, Result};
use ndarray::{Array2, ArrayView1, ArrayView2};

fn validate(x: ArrayView2<f64>, part: &Partition) -> Result<Vec<usize>> {
    if x.nrows() != part.len() {
        return Err(NcdError::invalid(format!(
            "matrix has {} rows but partition covers {}",
            x.nrows(),
            part.len()
        )));
    }
    if part.k() < 2 {
        return Err(NcdError::invalid("validity indices need at least 2 groups"));
    }
    let sizes = part.group_sizes();
    if sizes.iter().any(|&s| s == 0) {
        return Err(NcdError::invalid("validity indices need nonempty groups"));
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(NcdError::invalid("non-finite feature value"));
    }
    Ok(sizes)
}

fn euclid(a: ArrayView1<f64>, b: ArrayView1<f64>) -> f64 {
    a.iter()
        .zip(b.iter())
        .map(|(p, q)| (p - q) * (p - q))
        .sum::<f64>()
        .sqrt()
}

/// Mean silhouette coefficient over all instances.
///
/// For instance i, `a` is the mean distance to its own group and `b` the
/// smallest mean distance to any other group; the coefficient is
/// `(b - a) / max(a, b)`. Singleton groups contribute 0, as does an instance
/// whose `a` and `b` are both zero.
///
/// Streams distances row by row, so memory stays O(n) while time is O(n^2 d).
pub fn silhouette(x: ArrayView2<f64>, part: &Partition) -> Result<f64> {
    let sizes = validate(x, part)?;
    let n = x.nrows();
    let mut row = vec![0.0f64; n];
    let fill_row = |i: usize, row: &mut [f64]| {
        let xi = x.row(i);
        for (j, slot) in row.iter_mut().enumerate() {
            *slot = euclid(xi, x.row(j));
        }
    };
    Ok(silhouette_core(n, part, &sizes, fill_row, &mut row))
}

/// Silhouette over a precomputed distance matrix; used when a caller sweeps
/// many partitions of the same points.
pub(crate) fn silhouette_from_dists(dists: &Array2<f64>, part: &Partition) -> Result<f64> {
    let n = dists.nrows();
    if n != part.len() || dists.ncols() != n {
        return Err(NcdError::invalid("distance matrix shape mismatch"));
    }
    if part.k() < 2 {
        return Err(NcdError::invalid("validity indices need at least 2 groups"));
    }
    let sizes = part.group_sizes();
    if sizes.iter().any(|&s| s == 0) {
        return Err(NcdError::invalid("validity indices need nonempty groups"));
    }
    let mut row = vec![0.0f64; n];
    let fill_row = |i: usize, row: &mut [f64]| {
        row.copy_from_slice(dists.row(i).to_slice().expect("contiguous row"));
    };
    Ok(silhouette_core(n, part, &sizes, fill_row, &mut row))
}

fn silhouette_core(
    n: usize,
    part: &Partition,
    sizes: &[usize],
    mut fill_row: impl FnMut(usize, &mut [f64]),
    row: &mut [f64],
) -> f64 {
    let k = part.k();
    let labels = part.labels();
    let mut total = 0.0;
    let mut sums = vec![0.0f64; k];
    for i in 0..n {
        let own = labels[i];
        if sizes[own] == 1 {
            continue;
        }
        fill_row(i, row);
        sums.iter_mut().for_each(|s| *s = 0.0);
        for (j, &d) in row.iter().enumerate() {
            sums[labels[j]] += d;
        }
        // The self-distance is zero, so the own-group sum needs no correction.
        let a = sums[own] / (sizes[own] - 1) as f64;
        let b = (0..k)
            .filter(|&c| c != own)
            .map(|c| sums[c] / sizes[c] as f64)
            .fold(f64::INFINITY, f64::min);
        let denom = a.max(b);
        if denom > 0.0 {
            total += (b - a) / denom;
        }
    }
    total / n as f64
}

/// Calinski-Harabasz variance-ratio criterion:
/// `(between / (k - 1)) / (within / (n - k))`.
///
/// Returns infinity when every group collapses to a single point
/// (zero within-group scatter).
pub fn calinski_harabasz(x: ArrayView2<f64>, part: &Partition) -> Result<f64> {
    let sizes = validate(x, part)?;
    let (n, k) = (x.nrows(), part.k());
    if n <= k {
        return Err(NcdError::invalid(
            "variance-ratio criterion needs more instances than groups",
        ));
    }
    let centroids = group_means(x, part, &sizes);
    let global = x.mean_axis(ndarray::Axis(0)).expect("nonempty");

    let mut between = 0.0;
    for (c, size) in sizes.iter().enumerate() {
        let diff = euclid(centroids.row(c), global.view());
        between += *size as f64 * diff * diff;
    }
    let mut within = 0.0;
    for (i, &l) in part.labels().iter().enumerate() {
        let diff = euclid(x.row(i), centroids.row(l));
        within += diff * diff;
    }
    if within == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok((between / (k - 1) as f64) / (within / (n - k) as f64))
}

/// Davies-Bouldin index: the mean over groups of the worst
/// `(s_i + s_j) / d(mu_i, mu_j)` ratio, where `s` is the mean distance of a
/// group's members to its centroid.
///
/// Pairs whose centroids coincide (distance below 1e-12) are skipped; see
/// [`davies_bouldin_flagged`] for the skip count. If every pair coincides the
/// index is undefined and an error is returned.
pub fn davies_bouldin(x: ArrayView2<f64>, part: &Partition) -> Result<f64> {
    davies_bouldin_flagged(x, part).map(|(v, _)| v)
}

/// [`davies_bouldin`] together with the number of skipped coincident pairs.
pub fn davies_bouldin_flagged(x: ArrayView2<f64>, part: &Partition) -> Result<(f64, usize)> {
    let sizes = validate(x, part)?;
    let k = part.k();
    let centroids = group_means(x, part, &sizes);

    let mut scatter = vec![0.0f64; k];
    for (i, &l) in part.labels().iter().enumerate() {
        scatter[l] += euclid(x.row(i), centroids.row(l));
    }
    for (s, &size) in scatter.iter_mut().zip(&sizes) {
        *s /= size as f64;
    }

    let mut skipped = 0usize;
    let mut ratios = Vec::with_capacity(k);
    for i in 0..k {
        let mut worst = f64::NEG_INFINITY;
        for j in 0..k {
            if i == j {
                continue;
            }
            let d = euclid(centroids.row(i), centroids.row(j));
            if d < 1e-12 {
                if i < j {
                    skipped += 1;
                }
                continue;
            }
            worst = worst.max((scatter[i] + scatter[j]) / d);
        }
        if worst.is_finite() {
            ratios.push(worst);
        }
    }
    if ratios.is_empty() {
        return Err(NcdError::Numeric(
            "all centroid pairs coincide; index undefined".into(),
        ));
    }
    Ok((ratios.iter().sum::<f64>() / ratios.len() as f64, skipped))
}

/// Dunn index: smallest single-linkage distance between any two groups
/// divided by the largest group diameter.
///
/// Returns infinity when every group is a single point mass but groups are
/// separated; errors when separation and diameter are both zero.
pub fn dunn(x: ArrayView2<f64>, part: &Partition) -> Result<f64> {
    validate(x, part)?;
    let n = x.nrows();
    let labels = part.labels();
    let mut min_inter = f64::INFINITY;
    let mut max_diam = 0.0f64;
    for i in 0..n {
        let xi = x.row(i);
        for j in (i + 1)..n {
            let d = euclid(xi, x.row(j));
            if labels[i] == labels[j] {
                max_diam = max_diam.max(d);
            } else {
                min_inter = min_inter.min(d);
            }
        }
    }
    dunn_ratio(min_inter, max_diam)
}

/// [`dunn`] over a precomputed distance matrix.
pub(crate) fn dunn_from_dists(dists: &Array2<f64>, part: &Partition) -> Result<f64> {
    let n = dists.nrows();
    if n != part.len() || dists.ncols() != n {
        return Err(NcdError::invalid("distance matrix shape mismatch"));
    }
    let labels = part.labels();
    let mut min_inter = f64::INFINITY;
    let mut max_diam = 0.0f64;
    for i in 0..n {
        for j in (i + 1)..n {
            let d = dists[[i, j]];
            if labels[i] == labels[j] {
                max_diam = max_diam.max(d);
            } else {
                min_inter = min_inter.min(d);
            }
        }
    }
    dunn_ratio(min_inter, max_diam)
}

fn dunn_ratio(min_inter: f64, max_diam: f64) -> Result<f64> {
    if max_diam == 0.0 {
        if min_inter > 0.0 {
            return Ok(f64::INFINITY);
        }
        return Err(NcdError::Numeric(
            "all points coincide; index undefined".into(),
        ));
    }
    Ok(min_inter / max_diam)
}

fn group_means(x: ArrayView2<f64>, part: &Partition, sizes: &[usize]) -> Array2<f64> {
    let mut centroids = Array2::zeros((part.k(), x.ncols()));
    for (i, &l) in part.labels().iter().enumerate() {
        let mut row = centroids.row_mut(l);
        row += &x.row(i);
    }
    for (c, &size) in sizes.iter().enumerate() {
        let mut row = centroids.row_mut(c);
        row /= size as f64;
    }
    centroids
}
