//! Spectral clustering on a fully connected Gaussian similarity graph.
//!
//! The kernel bandwidth is not chosen directly: the caller picks `s_min`, the
//! similarity that the longest MST edge should map to, and the bandwidth
//! follows from inverting the Gaussian at that distance. This keeps the
//! parameter dimensionless and comparable across datasets.

use ndarray::{s, Array2, ArrayView2};

use crate::cluster::dists::pairwise_sq_dists;
use crate::cluster::eigen::top_eigen;
use crate::cluster::kmeans::{kmeans, KMeansConfig};
use crate::cluster::mst::mst_longest_edge_from_d2;
use crate::error::{NcdError, Result};
use crate::metrics::Partition;

/// Residual bound the eigensolver must certify for every returned pair.
const EIGEN_TOL: f64 = 1e-8;
/// Row sums below this make a vertex isolated for normalization purposes.
const ISOLATED_DEGREE: f64 = 1e-15;

/// Bandwidth parameters of one spectral run. `derived_sigma` always equals
/// `d_max / sqrt(-2 ln s_min)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SCParams {
    /// Similarity assigned to the longest MST edge, in (0, 1).
    pub s_min: f64,
    /// Number of embedding dimensions (smallest-eigenvalue eigenvectors).
    pub u: usize,
    pub derived_sigma: f64,
    pub d_max: f64,
}

impl SCParams {
    pub fn derive(s_min: f64, u: usize, d_max: f64) -> Result<Self> {
        if u == 0 {
            return Err(NcdError::invalid("embedding dimension u must be positive"));
        }
        let derived_sigma = sigma_from_smin(d_max, s_min)?;
        Ok(SCParams {
            s_min,
            u,
            derived_sigma,
            d_max,
        })
    }
}

/// Everything the spectral pipeline computes on the way to an embedding.
#[derive(Debug, Clone)]
pub struct SpectralArtifacts {
    /// Symmetric Gaussian affinities with a zero diagonal.
    pub adjacency: Array2<f64>,
    /// Row sums of the adjacency.
    pub degrees: Vec<f64>,
    /// Symmetric normalized Laplacian.
    pub l_sym: Array2<f64>,
    /// One row per point, one column per kept eigenvector.
    pub embedding: Array2<f64>,
    /// The `u` smallest Laplacian eigenvalues, ascending.
    pub eigenvalues: Vec<f64>,
    /// Vertices whose degree fell below the isolation threshold.
    pub isolated: Vec<usize>,
}

/// Options for the composed spectral clustering run.
#[derive(Debug, Clone)]
pub struct SpectralOptions {
    /// Normalize each embedding row to unit length before k-means.
    pub row_normalize: bool,
    pub kmeans: KMeansConfig,
}

impl Default for SpectralOptions {
    fn default() -> Self {
        Self {
            row_normalize: true,
            kmeans: KMeansConfig::default(),
        }
    }
}

/// Inverts the Gaussian kernel at the longest MST edge: the returned sigma
/// satisfies `exp(-d_max^2 / (2 sigma^2)) = s_min`.
pub fn sigma_from_smin(d_max: f64, s_min: f64) -> Result<f64> {
    if !(s_min > 0.0 && s_min < 1.0) {
        return Err(NcdError::invalid(format!(
            "s_min must lie strictly between 0 and 1, got {s_min}"
        )));
    }
    if !d_max.is_finite() || d_max <= 0.0 {
        return Err(NcdError::invalid(format!(
            "longest MST edge must be positive, got {d_max}; a zero value means \
             the data contains only duplicate points, deduplicate before clustering"
        )));
    }
    Ok(d_max / (-2.0 * s_min.ln()).sqrt())
}

/// Fully connected Gaussian affinity matrix: `exp(-|x_i - x_j|^2 / (2 sigma^2))`
/// off the diagonal, zeros on it. Off-diagonal entries are floored at the
/// smallest positive normal float so they stay strictly positive even when
/// the exponential underflows.
pub fn gaussian_adjacency(x: ArrayView2<f64>, sigma: f64) -> Result<Array2<f64>> {
    let d2 = pairwise_sq_dists(x);
    gaussian_adjacency_from_d2(&d2, sigma)
}

pub(crate) fn gaussian_adjacency_from_d2(d2: &Array2<f64>, sigma: f64) -> Result<Array2<f64>> {
    let n = d2.nrows();
    let mut a = Array2::zeros((n, n));
    fill_gaussian_from_d2(d2, sigma, &mut a)?;
    Ok(a)
}

/// Writes the Gaussian kernel of a squared-distance matrix into `out`,
/// overwriting every entry. Separated from the allocating variant so the
/// parameter search can reuse one buffer across candidates.
pub(crate) fn fill_gaussian_from_d2(
    d2: &Array2<f64>,
    sigma: f64,
    out: &mut Array2<f64>,
) -> Result<()> {
    if !sigma.is_finite() || sigma <= 0.0 {
        return Err(NcdError::invalid(format!(
            "kernel bandwidth must be positive, got {sigma}"
        )));
    }
    let n = d2.nrows();
    debug_assert_eq!(out.dim(), (n, n));
    let inv = 1.0 / (2.0 * sigma * sigma);
    // d2 is exactly symmetric, so filling full rows keeps the kernel exactly
    // symmetric without a mirroring pass over strided columns.
    for (i, (mut orow, drow)) in out.rows_mut().into_iter().zip(d2.rows()).enumerate() {
        for (o, &d) in orow.iter_mut().zip(drow.iter()) {
            *o = (-d * inv).exp().max(f64::MIN_POSITIVE);
        }
        orow[i] = 0.0;
    }
    Ok(())
}

/// Degrees plus the symmetric normalized Laplacian `I - D^{-1/2} A D^{-1/2}`.
/// Vertices whose degree is numerically zero get identity rows and are
/// reported in `isolated` so callers can warn about them.
#[derive(Debug, Clone)]
pub struct Laplacian {
    pub l_sym: Array2<f64>,
    pub degrees: Vec<f64>,
    pub isolated: Vec<usize>,
}

pub fn sym_normalized_laplacian(a: &Array2<f64>) -> Result<Laplacian> {
    let n = a.nrows();
    if n == 0 || a.ncols() != n {
        return Err(NcdError::invalid("adjacency must be square and nonempty"));
    }
    let mut max_entry = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            let v = a[[i, j]];
            if !v.is_finite() || v < 0.0 {
                return Err(NcdError::invalid(format!(
                    "adjacency entry ({i},{j}) = {v} is negative or non-finite"
                )));
            }
            max_entry = max_entry.max(v);
        }
    }
    for i in 0..n {
        for j in (i + 1)..n {
            if (a[[i, j]] - a[[j, i]]).abs() > 1e-10 * (1.0 + max_entry) {
                return Err(NcdError::invalid(format!(
                    "adjacency is not symmetric at ({i},{j})"
                )));
            }
        }
    }

    let degrees: Vec<f64> = a.rows().into_iter().map(|r| r.sum()).collect();
    let isolated: Vec<usize> = (0..n).filter(|&i| degrees[i] < ISOLATED_DEGREE).collect();
    let inv_sqrt: Vec<f64> = degrees
        .iter()
        .map(|&d| if d < ISOLATED_DEGREE { 0.0 } else { 1.0 / d.sqrt() })
        .collect();

    let mut l = Array2::zeros((n, n));
    for i in 0..n {
        l[[i, i]] = 1.0 - a[[i, i]] * inv_sqrt[i] * inv_sqrt[i];
        for j in (i + 1)..n {
            let v = -a[[i, j]] * inv_sqrt[i] * inv_sqrt[j];
            l[[i, j]] = v;
            l[[j, i]] = v;
        }
    }
    for &i in &isolated {
        for j in 0..n {
            l[[i, j]] = 0.0;
            l[[j, i]] = 0.0;
        }
        l[[i, i]] = 1.0;
    }
    Ok(Laplacian {
        l_sym: l,
        degrees,
        isolated,
    })
}

/// The `u` eigenvectors of the Laplacian with the smallest eigenvalues, as
/// columns ordered by ascending eigenvalue, with each row scaled to unit
/// length. Returns the embedding and the eigenvalues.
pub fn spectral_embedding(l_sym: &Array2<f64>, u: usize) -> Result<(Array2<f64>, Vec<f64>)> {
    spectral_embedding_opts(l_sym, u, true)
}

/// As [`spectral_embedding`], with row normalization optional. Eigenvector
/// signs follow one convention: the entry of largest magnitude (first such
/// index on ties) is positive. Rows whose norm vanishes are left at zero
/// rather than divided.
pub fn spectral_embedding_opts(
    l_sym: &Array2<f64>,
    u: usize,
    row_normalize: bool,
) -> Result<(Array2<f64>, Vec<f64>)> {
    let n = l_sym.nrows();
    if n == 0 || l_sym.ncols() != n {
        return Err(NcdError::invalid("Laplacian must be square and nonempty"));
    }
    if u == 0 || u > n {
        return Err(NcdError::invalid(format!(
            "embedding dimension {u} outside 1..={n}"
        )));
    }
    // The smallest Laplacian eigenpairs are the largest ones of I - L, which
    // the iterative path extracts much faster. The construction below is
    // exact: our Laplacian has unit diagonal, so I - L has an exactly zero
    // diagonal and exactly negated off-diagonal entries.
    let mut m = Array2::zeros((n, n));
    for i in 0..n {
        for j in 0..n {
            m[[i, j]] = if i == j { 1.0 - l_sym[[i, i]] } else { -l_sym[[i, j]] };
        }
    }
    let (mu, mut vecs) = top_eigen(m.view(), u, EIGEN_TOL)?;
    let eigenvalues: Vec<f64> = mu.iter().map(|&v| 1.0 - v).collect();

    for j in 0..u {
        let col = vecs.column(j);
        let mut pivot = 0usize;
        let mut best = -1.0f64;
        for (i, &v) in col.iter().enumerate() {
            if v.abs() > best {
                best = v.abs();
                pivot = i;
            }
        }
        if col[pivot] < 0.0 {
            vecs.column_mut(j).mapv_inplace(|v| -v);
        }
    }
    if row_normalize {
        for mut row in vecs.rows_mut() {
            let norm = row.dot(&row).sqrt();
            if norm > 1e-300 {
                row.mapv_inplace(|v| v / norm);
            }
        }
    }
    Ok((vecs, eigenvalues))
}

/// Runs the whole pipeline on raw points: longest MST edge, bandwidth from
/// `s_min`, Gaussian graph, normalized Laplacian, embedding.
pub fn spectral_artifacts(
    x: ArrayView2<f64>,
    s_min: f64,
    u: usize,
    row_normalize: bool,
) -> Result<(SpectralArtifacts, SCParams)> {
    let d2 = pairwise_sq_dists(x);
    let (d_max, _) = mst_longest_edge_from_d2(&d2)?;
    let params = SCParams::derive(s_min, u, d_max)?;
    let adjacency = gaussian_adjacency_from_d2(&d2, params.derived_sigma)?;
    let lap = sym_normalized_laplacian(&adjacency)?;
    let (embedding, eigenvalues) = spectral_embedding_opts(&lap.l_sym, u, row_normalize)?;
    Ok((
        SpectralArtifacts {
            adjacency,
            degrees: lap.degrees,
            l_sym: lap.l_sym,
            embedding,
            eigenvalues,
            isolated: lap.isolated,
        },
        params,
    ))
}

/// Spectral clustering into `k` groups with default options.
pub fn spectral_clustering(
    x: ArrayView2<f64>,
    k: usize,
    s_min: f64,
    u: usize,
    seed: u64,
) -> Result<(Partition, SCParams)> {
    spectral_clustering_opts(x, k, s_min, u, seed, &SpectralOptions::default())
}

pub fn spectral_clustering_opts(
    x: ArrayView2<f64>,
    k: usize,
    s_min: f64,
    u: usize,
    seed: u64,
    opts: &SpectralOptions,
) -> Result<(Partition, SCParams)> {
    let (artifacts, params) = spectral_artifacts(x, s_min, u, opts.row_normalize)?;
    let km = kmeans(artifacts.embedding.view(), k, &opts.kmeans, seed, None)?;
    Ok((km.assignment, params))
}

/// Rescales the embedding rows of `m` in place by `D^{-1/2} A D^{-1/2}` given
/// the raw adjacency in `m`; returns degrees and isolated vertices. This is
/// the allocation-free analogue of building the Laplacian and subtracting it
/// from the identity, used by the parameter search loop.
pub(crate) fn normalized_affinity_in_place(m: &mut Array2<f64>) -> (Vec<f64>, Vec<usize>) {
    let n = m.nrows();
    let degrees: Vec<f64> = m.rows().into_iter().map(|r| r.sum()).collect();
    let isolated: Vec<usize> = (0..n).filter(|&i| degrees[i] < ISOLATED_DEGREE).collect();
    let inv_sqrt: Vec<f64> = degrees
        .iter()
        .map(|&d| if d < ISOLATED_DEGREE { 0.0 } else { 1.0 / d.sqrt() })
        .collect();
    for i in 0..n {
        let si = inv_sqrt[i];
        let mut row = m.slice_mut(s![i, ..]);
        for (j, v) in row.iter_mut().enumerate() {
            *v *= si * inv_sqrt[j];
        }
    }
    for &i in &isolated {
        for j in 0..n {
            m[[i, j]] = 0.0;
            m[[j, i]] = 0.0;
        }
    }
    (degrees, isolated)
}

/// Embedding of a pre-normalized affinity matrix (diagonal-free, already
/// scaled by inverse square-root degrees): the top-`u` eigenpairs, reported
/// as ascending Laplacian eigenvalues, signs fixed, rows optionally
/// normalized.
pub(crate) fn embed_normalized_affinity(
    m: ArrayView2<f64>,
    u: usize,
    row_normalize: bool,
) -> Result<(Array2<f64>, Vec<f64>)> {
    let (mu, mut vecs) = top_eigen(m, u, EIGEN_TOL)?;
    let eigenvalues: Vec<f64> = mu.iter().map(|&v| 1.0 - v).collect();
    for j in 0..u {
        let col = vecs.column(j);
        let mut pivot = 0usize;
        let mut best = -1.0f64;
        for (i, &v) in col.iter().enumerate() {
            if v.abs() > best {
                best = v.abs();
                pivot = i;
            }
        }
        if col[pivot] < 0.0 {
            vecs.column_mut(j).mapv_inplace(|v| -v);
        }
    }
    if row_normalize {
        for mut row in vecs.rows_mut() {
            let norm = row.dot(&row).sqrt();
            if norm > 1e-300 {
                row.mapv_inplace(|v| v / norm);
            }
        }
    }
    Ok((vecs, eigenvalues))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{make_blobs, BlobSpec};
    use crate::metrics::{ari, clustering_accuracy, Partition};
    use approx::assert_abs_diff_eq;
    use ndarray::array;

    #[test]
    fn sigma_closed_forms() {
        let s = sigma_from_smin(2.0, (-0.5f64).exp()).unwrap();
        assert_abs_diff_eq!(s, 2.0, epsilon = 1e-12);
        let s = sigma_from_smin(3.0, (-2.0f64).exp()).unwrap();
        assert_abs_diff_eq!(s, 1.5, epsilon = 1e-12);
    }

    #[test]
    fn sigma_round_trips_through_the_kernel() {
        for s_min in [0.01, 0.3, 0.5, 0.77, 0.999] {
            for d_max in [0.1, 1.0, 42.0] {
                let sigma = sigma_from_smin(d_max, s_min).unwrap();
                let back = (-d_max * d_max / (2.0 * sigma * sigma)).exp();
                assert_abs_diff_eq!(back, s_min, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn sigma_rejects_degenerate_inputs() {
        assert!(sigma_from_smin(1.0, 0.0).is_err());
        assert!(sigma_from_smin(1.0, 1.0).is_err());
        assert!(sigma_from_smin(1.0, -0.2).is_err());
        assert!(sigma_from_smin(0.0, 0.5).is_err());
        assert!(sigma_from_smin(-1.0, 0.5).is_err());
        assert!(sigma_from_smin(1.0, f64::NAN).is_err());
    }

    #[test]
    fn adjacency_maps_longest_edge_to_smin() {
        // Two points at distance d_max: with the derived bandwidth their
        // affinity must be exactly s_min.
        let x = array![[0.0], [3.0]];
        let s_min = 0.37;
        let sigma = sigma_from_smin(3.0, s_min).unwrap();
        let a = gaussian_adjacency(x.view(), sigma).unwrap();
        assert_abs_diff_eq!(a[[0, 1]], s_min, epsilon = 1e-12);
        assert_eq!(a[[0, 0]], 0.0);
        assert_eq!(a[[1, 1]], 0.0);
    }

    #[test]
    fn adjacency_limits() {
        let x = array![[0.0], [1.0], [1.0]];
        let a = gaussian_adjacency(x.view(), 1e12).unwrap();
        // Huge bandwidth: every off-diagonal affinity tends to 1.
        assert!(a[[0, 1]] > 0.999_999);
        // Coincident points have affinity exactly 1.
        assert_eq!(a[[1, 2]], 1.0);
        assert!(gaussian_adjacency(x.view(), 0.0).is_err());
        assert!(gaussian_adjacency(x.view(), -1.0).is_err());
    }

    #[test]
    fn adjacency_is_scale_consistent() {
        // Scaling the data and the bandwidth together leaves A unchanged.
        let x = array![[0.0, 1.0], [2.0, 0.5], [-1.0, 3.0]];
        let a1 = gaussian_adjacency(x.view(), 0.8).unwrap();
        let xs = x.mapv(|v| v * 7.5);
        let a2 = gaussian_adjacency(xs.view(), 0.8 * 7.5).unwrap();
        for (p, q) in a1.iter().zip(a2.iter()) {
            assert_abs_diff_eq!(p, q, epsilon = 1e-12);
        }
    }

    #[test]
    fn two_node_laplacian_closed_form() {
        let a = array![[0.0, 1.0], [1.0, 0.0]];
        let lap = sym_normalized_laplacian(&a).unwrap();
        assert_eq!(lap.l_sym, array![[1.0, -1.0], [-1.0, 1.0]]);
        assert_eq!(lap.degrees, vec![1.0, 1.0]);
        assert!(lap.isolated.is_empty());
        let (_, vals) = spectral_embedding_opts(&lap.l_sym, 2, false).unwrap();
        assert_abs_diff_eq!(vals[0], 0.0, epsilon = 1e-10);
        assert_abs_diff_eq!(vals[1], 2.0, epsilon = 1e-10);
    }

    #[test]
    fn sqrt_degree_vector_is_the_zero_eigenvector() {
        let x = array![[0.0], [0.4], [1.1], [2.0]];
        let a = gaussian_adjacency(x.view(), 1.0).unwrap();
        let lap = sym_normalized_laplacian(&a).unwrap();
        let v: Vec<f64> = lap.degrees.iter().map(|d| d.sqrt()).collect();
        let n = v.len();
        for i in 0..n {
            let r: f64 = (0..n).map(|j| lap.l_sym[[i, j]] * v[j]).sum();
            assert_abs_diff_eq!(r, 0.0, epsilon = 1e-8);
        }
    }

    #[test]
    fn isolated_vertices_get_identity_rows() {
        let mut a = Array2::zeros((3, 3));
        a[[0, 1]] = 0.9;
        a[[1, 0]] = 0.9;
        // Vertex 2 has no weight at all.
        let lap = sym_normalized_laplacian(&a).unwrap();
        assert_eq!(lap.isolated, vec![2]);
        assert_eq!(lap.l_sym[[2, 2]], 1.0);
        assert_eq!(lap.l_sym[[2, 0]], 0.0);
        assert_eq!(lap.l_sym[[0, 2]], 0.0);
    }

    #[test]
    fn disconnected_pair_gives_zero_eigenvalue_twice() {
        // Two 2-cliques with no cross weight: eigenvalue 0 has multiplicity 2.
        let mut a = Array2::zeros((4, 4));
        a[[0, 1]] = 1.0;
        a[[1, 0]] = 1.0;
        a[[2, 3]] = 1.0;
        a[[3, 2]] = 1.0;
        let lap = sym_normalized_laplacian(&a).unwrap();
        let (_, vals) = spectral_embedding_opts(&lap.l_sym, 2, false).unwrap();
        assert_abs_diff_eq!(vals[0], 0.0, epsilon = 1e-10);
        assert_abs_diff_eq!(vals[1], 0.0, epsilon = 1e-10);
    }

    #[test]
    fn block_structure_collapses_to_distinct_rows() {
        // Two components with unequal degrees: after row normalization every
        // vertex of a component lands on the same embedding point.
        let mut a = Array2::zeros((5, 5));
        let edges = [(0, 1, 0.9), (1, 2, 0.4), (0, 2, 0.7), (3, 4, 0.2)];
        for &(i, j, w) in &edges {
            a[[i, j]] = w;
            a[[j, i]] = w;
        }
        let lap = sym_normalized_laplacian(&a).unwrap();
        let (emb, vals) = spectral_embedding(&lap.l_sym, 2).unwrap();
        assert_abs_diff_eq!(vals[0], 0.0, epsilon = 1e-10);
        assert_abs_diff_eq!(vals[1], 0.0, epsilon = 1e-10);
        for i in 1..3 {
            for f in 0..2 {
                assert_abs_diff_eq!(emb[[i, f]], emb[[0, f]], epsilon = 1e-8);
            }
        }
        for f in 0..2 {
            assert_abs_diff_eq!(emb[[4, f]], emb[[3, f]], epsilon = 1e-8);
        }
        let cross: f64 = (0..2).map(|f| emb[[0, f]] * emb[[3, f]]).sum();
        assert!(cross.abs() < 1e-6, "components should embed orthogonally");
    }

    #[test]
    fn full_embedding_is_orthogonal_without_row_normalization() {
        let x = array![[0.0], [0.5], [1.5], [4.0], [4.2]];
        let a = gaussian_adjacency(x.view(), 1.0).unwrap();
        let lap = sym_normalized_laplacian(&a).unwrap();
        let n = 5;
        let (emb, vals) = spectral_embedding_opts(&lap.l_sym, n, false).unwrap();
        for j in 0..n {
            for k in j..n {
                let dot = emb.column(j).dot(&emb.column(k));
                let want = if j == k { 1.0 } else { 0.0 };
                assert_abs_diff_eq!(dot, want, epsilon = 1e-8);
            }
        }
        for w in vals.windows(2) {
            assert!(w[0] <= w[1] + 1e-12);
        }
    }

    #[test]
    fn embedding_pairs_satisfy_the_laplacian_residual() {
        let x = array![
            [0.0, 0.0],
            [0.3, 0.1],
            [0.1, 0.4],
            [5.0, 5.0],
            [5.2, 4.9],
            [4.8, 5.1],
            [9.0, 0.0]
        ];
        let a = gaussian_adjacency(x.view(), 1.7).unwrap();
        let lap = sym_normalized_laplacian(&a).unwrap();
        let (emb, vals) = spectral_embedding_opts(&lap.l_sym, 4, false).unwrap();
        for j in 0..4 {
            let v = emb.column(j);
            let mut r = lap.l_sym.dot(&v);
            r.scaled_add(-vals[j], &v.to_owned());
            assert!(r.dot(&r).sqrt() < 1e-8);
        }
    }

    #[test]
    fn sign_convention_makes_largest_entry_positive() {
        let x = array![[0.0], [1.0], [2.5], [7.0]];
        let a = gaussian_adjacency(x.view(), 1.2).unwrap();
        let lap = sym_normalized_laplacian(&a).unwrap();
        let (emb, _) = spectral_embedding_opts(&lap.l_sym, 3, false).unwrap();
        for j in 0..3 {
            let col = emb.column(j);
            let peak = col.iter().cloned().fold(0.0f64, |m, v| if v.abs() > m.abs() { v } else { m });
            assert!(peak > 0.0, "column {j} peak {peak} should be positive");
        }
    }

    #[test]
    fn two_blobs_are_recovered_for_a_range_of_smin() {
        let blobs = make_blobs(
            &[
                BlobSpec::new(vec![0.0, 0.0], 20, 0.3),
                BlobSpec::new(vec![8.0, 8.0], 25, 0.3),
            ],
            5,
        )
        .unwrap();
        let truth = Partition::from_labels(blobs.labels().unwrap());
        for s_min in [0.3, 0.5, 0.7, 0.9] {
            let (part, params) = spectral_clustering(blobs.x.view(), 2, s_min, 2, 11).unwrap();
            let acc = clustering_accuracy(&truth, &part).unwrap();
            assert_abs_diff_eq!(acc, 1.0, epsilon = 1e-12);
            assert!(params.derived_sigma > 0.0);
            assert_abs_diff_eq!(
                (-params.d_max.powi(2) / (2.0 * params.derived_sigma.powi(2))).exp(),
                s_min,
                epsilon = 1e-12
            );
        }
    }

    #[test]
    fn k_one_puts_everything_in_one_cluster() {
        let x = array![[0.0], [1.0], [9.0]];
        let (part, _) = spectral_clustering(x.view(), 1, 0.5, 1, 0).unwrap();
        assert_eq!(part.k(), 1);
        assert!(part.labels().iter().all(|&l| l == 0));
    }

    #[test]
    fn permutation_of_the_input_permutes_the_partition() {
        let blobs = make_blobs(
            &[
                BlobSpec::new(vec![0.0], 12, 0.2),
                BlobSpec::new(vec![6.0], 14, 0.2),
                BlobSpec::new(vec![12.0], 10, 0.2),
            ],
            3,
        )
        .unwrap();
        let n = blobs.n();
        let perm: Vec<usize> = (0..n).rev().collect();
        let xp = blobs.x.select(ndarray::Axis(0), &perm);
        let (p1, _) = spectral_clustering(blobs.x.view(), 3, 0.6, 3, 4).unwrap();
        let (p2, _) = spectral_clustering(xp.view(), 3, 0.6, 3, 4).unwrap();
        let unpermuted: Vec<usize> = {
            let mut v = vec![0usize; n];
            for (pos, &orig) in perm.iter().enumerate() {
                v[orig] = p2.labels()[pos];
            }
            v
        };
        let a = ari(&p1, &Partition::from_labels(&unpermuted)).unwrap();
        assert_abs_diff_eq!(a, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn in_place_normalization_matches_the_laplacian() {
        let x = array![[0.0], [0.7], [2.0], [3.1]];
        let a = gaussian_adjacency(x.view(), 0.9).unwrap();
        let lap = sym_normalized_laplacian(&a).unwrap();
        let mut m = a.clone();
        let (degrees, isolated) = normalized_affinity_in_place(&mut m);
        assert_eq!(degrees, lap.degrees);
        assert!(isolated.is_empty());
        for i in 0..4 {
            for j in 0..4 {
                let want = if i == j { 1.0 - lap.l_sym[[i, j]] } else { -lap.l_sym[[i, j]] };
                assert_abs_diff_eq!(m[[i, j]], want, epsilon = 1e-14);
            }
        }
        let (e1, v1) = embed_normalized_affinity(m.view(), 2, true).unwrap();
        let (e2, v2) = spectral_embedding(&lap.l_sym, 2).unwrap();
        for (a, b) in v1.iter().zip(v2.iter()) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-9);
        }
        for (a, b) in e1.iter().zip(e2.iter()) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-7);
        }
    }
}
