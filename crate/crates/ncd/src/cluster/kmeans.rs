//! Lloyd k-means with k-means++ seeding.
//!
//! The Lloyd core takes an explicit set of starting centroids and a
//! `mutable_from` split point: centroids below that index are frozen and act
//! only as assignment targets. Plain k-means freezes nothing; the novel-class
//! variants freeze the known-class block.

use ndarray::{Array2, ArrayView2, Axis};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::cluster::dists::{rect_sq_dists, row_sq_norms};
use crate::data::Dataset;
use crate::error::{NcdError, Result};
use crate::metrics::Partition;
use crate::seeding::derive_seed;

/// Stopping and restart policy for k-means.
#[derive(Debug, Clone)]
pub struct KMeansConfig {
    /// Independent restarts; the run with the lowest inertia wins.
    pub n_init: usize,
    /// Iteration cap per restart.
    pub max_iter: usize,
    /// Converged when no centroid moves further than this between iterations.
    pub tol: f64,
}

impl Default for KMeansConfig {
    fn default() -> Self {
        Self {
            n_init: 10,
            max_iter: 300,
            tol: 1e-6,
        }
    }
}

/// Outcome of a k-means run.
#[derive(Debug, Clone)]
pub struct KMeansResult {
    pub assignment: Partition,
    /// Final centroids, one row per cluster.
    pub centroids: Array2<f64>,
    /// Sum of squared distances from each point to its assigned centroid.
    pub inertia: f64,
    pub n_iter: usize,
    pub converged: bool,
}

/// Lloyd iterations from a fixed starting point. Assigns every point to its
/// nearest centroid (ties to the lowest index), refits the mutable centroids
/// to the means of their members, and repeats until the largest centroid
/// displacement drops below `tol`. An empty mutable cluster is reseeded to
/// the point farthest from that cluster's stale centroid. The inertia of the
/// running assignment never increases between iterations; that invariant is
/// asserted inside the loop.
pub(crate) struct LloydOutcome {
    pub assign: Vec<usize>,
    pub centroids: Array2<f64>,
    pub inertia: f64,
    pub n_iter: usize,
    pub converged: bool,
}

pub(crate) fn lloyd(
    x: ArrayView2<f64>,
    mut centroids: Array2<f64>,
    mutable_from: usize,
    max_iter: usize,
    tol: f64,
) -> LloydOutcome {
    let n = x.nrows();
    let k = centroids.nrows();
    let mut assign = vec![0usize; n];
    let mut d2min = vec![0.0f64; n];
    let mut prev_inertia = f64::INFINITY;
    let mut n_iter = 0;
    let mut converged = false;

    for _ in 0..max_iter {
        n_iter += 1;
        let mut inertia = assign_nearest(x, centroids.view(), &mut assign, &mut d2min);

        // Reseed empty mutable clusters before refitting.
        let mut counts = vec![0usize; k];
        for &a in &assign {
            counts[a] += 1;
        }
        let mut taken: Vec<usize> = Vec::new();
        for j in mutable_from..k {
            if counts[j] > 0 {
                continue;
            }
            if let Some(p) = farthest_point(x, centroids.row(j).view(), &taken) {
                let old = assign[p];
                counts[old] -= 1;
                counts[j] += 1;
                assign[p] = j;
                inertia -= d2min[p];
                d2min[p] = 0.0;
                centroids.row_mut(j).assign(&x.row(p));
                taken.push(p);
            }
        }

        assert!(
            inertia <= prev_inertia * (1.0 + 1e-9) + 1e-9,
            "inertia increased within Lloyd iterations: {prev_inertia} -> {inertia}"
        );
        prev_inertia = inertia;

        // Refit mutable centroids to the means of their members.
        let d = x.ncols();
        let mut sums = Array2::<f64>::zeros((k, d));
        for (i, &a) in assign.iter().enumerate() {
            if a >= mutable_from {
                let mut row = sums.row_mut(a);
                row += &x.row(i);
            }
        }
        let mut max_shift_sq = 0.0f64;
        for j in mutable_from..k {
            if counts[j] == 0 {
                continue;
            }
            let inv = 1.0 / counts[j] as f64;
            let mut shift_sq = 0.0;
            for f in 0..d {
                let new = sums[[j, f]] * inv;
                let delta = new - centroids[[j, f]];
                shift_sq += delta * delta;
                centroids[[j, f]] = new;
            }
            max_shift_sq = max_shift_sq.max(shift_sq);
        }
        if max_shift_sq.sqrt() < tol {
            converged = true;
            break;
        }
    }

    // Final pass so the reported assignment matches the returned centroids.
    let inertia = assign_nearest(x, centroids.view(), &mut assign, &mut d2min);
    assert!(
        inertia <= prev_inertia * (1.0 + 1e-9) + 1e-9,
        "final assignment increased inertia: {prev_inertia} -> {inertia}"
    );
    LloydOutcome {
        assign,
        centroids,
        inertia,
        n_iter,
        converged,
    }
}

/// Nearest-centroid assignment; returns the summed squared distances.
pub(crate) fn assign_nearest(
    x: ArrayView2<f64>,
    centroids: ArrayView2<f64>,
    assign: &mut [usize],
    d2min: &mut [f64],
) -> f64 {
    let d2 = rect_sq_dists(x, centroids);
    let mut inertia = 0.0;
    for (i, row) in d2.rows().into_iter().enumerate() {
        let mut best = 0usize;
        let mut best_d = row[0];
        for (j, &v) in row.iter().enumerate().skip(1) {
            if v < best_d {
                best = j;
                best_d = v;
            }
        }
        assign[i] = best;
        d2min[i] = best_d;
        inertia += best_d;
    }
    inertia
}

fn farthest_point(
    x: ArrayView2<f64>,
    centroid: ndarray::ArrayView1<f64>,
    excluded: &[usize],
) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, row) in x.rows().into_iter().enumerate() {
        if excluded.contains(&i) {
            continue;
        }
        let d: f64 = row
            .iter()
            .zip(centroid.iter())
            .map(|(a, b)| (a - b) * (a - b))
            .sum();
        if best.map_or(true, |(_, bd)| d > bd) {
            best = Some((i, d));
        }
    }
    best.map(|(i, _)| i)
}

/// k-means clustering. Restarts `cfg.n_init` times from k-means++ seedings
/// derived from `seed` and keeps the run with the lowest inertia; when
/// `init_centroids` is given, a single run starts from exactly those
/// centroids instead.
pub fn kmeans(
    x: ArrayView2<f64>,
    k: usize,
    cfg: &KMeansConfig,
    seed: u64,
    init_centroids: Option<ArrayView2<f64>>,
) -> Result<KMeansResult> {
    let n = x.nrows();
    if k == 0 {
        return Err(NcdError::invalid("k must be positive"));
    }
    if k > n {
        return Err(NcdError::invalid(format!(
            "cannot form {k} clusters from {n} points"
        )));
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(NcdError::invalid("data contains non-finite values"));
    }
    if cfg.n_init == 0 || cfg.max_iter == 0 {
        return Err(NcdError::invalid("n_init and max_iter must be positive"));
    }

    let mut best: Option<LloydOutcome> = None;
    if let Some(init) = init_centroids {
        if init.nrows() != k || init.ncols() != x.ncols() {
            return Err(NcdError::invalid(format!(
                "initial centroids are {}x{}, expected {k}x{}",
                init.nrows(),
                init.ncols(),
                x.ncols()
            )));
        }
        best = Some(lloyd(x, init.to_owned(), 0, cfg.max_iter, cfg.tol));
    } else {
        for r in 0..cfg.n_init {
            let init = kmeanspp_init(x, k, derive_seed(seed, r as u64))?;
            let run = lloyd(x, init, 0, cfg.max_iter, cfg.tol);
            if best.as_ref().map_or(true, |b| run.inertia < b.inertia) {
                best = Some(run);
            }
        }
    }
    let out = best.expect("at least one restart");
    Ok(KMeansResult {
        assignment: Partition::from_dense(out.assign, k)?,
        centroids: out.centroids,
        inertia: out.inertia,
        n_iter: out.n_iter,
        converged: out.converged,
    })
}

/// Full k-means++ seeding: first centroid uniform, the rest drawn one at a
/// time with probability proportional to squared distance from the chosen set.
pub(crate) fn kmeanspp_init(x: ArrayView2<f64>, k: usize, seed: u64) -> Result<Array2<f64>> {
    let n = x.nrows();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let first = rng.random_range(0..n);
    let mut centroids = Array2::zeros((k, x.ncols()));
    centroids.row_mut(0).assign(&x.row(first));
    for j in 1..k {
        let idx = kmeanspp_next(x, centroids.slice(ndarray::s![..j, ..]), derive_seed(seed, j as u64))?;
        centroids.row_mut(j).assign(&x.row(idx));
    }
    Ok(centroids)
}

/// Draws the index of the next k-means++ centroid: each candidate point is
/// chosen with probability proportional to its squared distance from the
/// nearest existing centroid, so points coincident with a centroid have
/// probability zero. If every candidate has probability zero the draw falls
/// back to a uniform choice among points that do not equal any centroid, or
/// among all points when no such point exists.
pub fn kmeanspp_next(x: ArrayView2<f64>, existing: ArrayView2<f64>, seed: u64) -> Result<usize> {
    let n = x.nrows();
    if n == 0 {
        return Err(NcdError::invalid("no candidate points"));
    }
    if existing.nrows() == 0 {
        return Err(NcdError::invalid("need at least one existing centroid"));
    }
    if existing.ncols() != x.ncols() {
        return Err(NcdError::invalid(format!(
            "centroid dimension {} does not match data dimension {}",
            existing.ncols(),
            x.ncols()
        )));
    }
    let d2 = rect_sq_dists(x, existing);
    let weights: Vec<f64> = d2
        .rows()
        .into_iter()
        .map(|row| row.iter().copied().fold(f64::INFINITY, f64::min))
        .collect();
    let total: f64 = weights.iter().sum();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    if total > 0.0 {
        let r = rng.random_range(0.0..total);
        let mut cum = 0.0;
        for (i, &w) in weights.iter().enumerate() {
            cum += w;
            if r < cum {
                return Ok(i);
            }
        }
        // Rounding pushed the cumulative sum short of `total`; take the last
        // candidate with positive weight.
        return Ok(weights
            .iter()
            .rposition(|&w| w > 0.0)
            .expect("total > 0 implies a positive weight"));
    }
    let off_centroid: Vec<usize> = (0..n)
        .filter(|&i| {
            !existing
                .rows()
                .into_iter()
                .any(|c| c.iter().zip(x.row(i).iter()).all(|(a, b)| a == b))
        })
        .collect();
    if off_centroid.is_empty() {
        Ok(rng.random_range(0..n))
    } else {
        Ok(off_centroid[rng.random_range(0..off_centroid.len())])
    }
}

/// Per-class mean feature vectors of a labeled dataset, one row per class.
pub fn class_means(ds: &Dataset) -> Result<Array2<f64>> {
    let y = ds.labels()?;
    let c = ds.class_names.len();
    let d = ds.d();
    let mut sums = Array2::<f64>::zeros((c, d));
    let mut counts = vec![0usize; c];
    for (i, &label) in y.iter().enumerate() {
        counts[label] += 1;
        let mut row = sums.row_mut(label);
        row += &ds.x.index_axis(Axis(0), i);
    }
    for (j, &cnt) in counts.iter().enumerate() {
        if cnt == 0 {
            return Err(NcdError::invalid(format!(
                "class {j} has no instances; cannot form its mean"
            )));
        }
        let inv = 1.0 / cnt as f64;
        sums.row_mut(j).mapv_inplace(|v| v * inv);
    }
    Ok(sums)
}

#[allow(unused)]
pub(crate) fn sq_norms_of(x: ArrayView2<f64>) -> Vec<f64> {
    row_sq_norms(x).to_vec()
}
