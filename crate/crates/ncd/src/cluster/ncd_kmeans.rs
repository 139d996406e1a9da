//! k-means for novel class discovery.
//!
//! Known classes contribute exact mean centroids that anchor the k-means++
//! seeding: every novel centroid is drawn far from the known ones as well as
//! from each other. After seeding, Lloyd iterations run on the unlabeled data
//! with the novel centroids only; the known centroids never move and take no
//! further part. Ablation modes relax either choice.

use ndarray::{s, Array2, ArrayView2, Axis};

use crate::cluster::kmeans::{class_means, kmeanspp_next, lloyd, KMeansConfig, KMeansResult};
use crate::data::Dataset;
use crate::error::{NcdError, Result};
use crate::metrics::Partition;
use crate::seeding::derive_seed;

/// Which centroids Lloyd iterations may move.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CentroidUpdate {
    /// Known-class centroids stay at the exact class means.
    NovelOnly,
    /// Every centroid is refit, known ones included.
    All,
}

/// Which points participate in Lloyd iterations.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LloydData {
    UnlabeledOnly,
    /// Labeled and unlabeled instances together.
    All,
}

/// Discovers `k` novel clusters in the unlabeled data. Runs `n_init`
/// independent restarts (seeded from `seed`) and keeps the one whose final
/// objective is lowest. The returned assignment covers the unlabeled rows,
/// the centroids are the `k` novel ones, and the inertia is the unlabeled
/// pointsum against those centroids.
pub fn ncd_kmeans(
    labeled: &Dataset,
    unlabeled: &Dataset,
    k: usize,
    n_init: usize,
    seed: u64,
) -> Result<KMeansResult> {
    ncd_kmeans_mode(
        labeled,
        unlabeled,
        k,
        n_init,
        seed,
        CentroidUpdate::NovelOnly,
        LloydData::UnlabeledOnly,
    )
}

/// [`ncd_kmeans`] with the centroid-update and data-participation choices
/// exposed for ablation. Updating known centroids on unlabeled data alone is
/// rejected: without labeled points the known centroids are indistinguishable
/// from ordinary extra clusters.
pub fn ncd_kmeans_mode(
    labeled: &Dataset,
    unlabeled: &Dataset,
    k: usize,
    n_init: usize,
    seed: u64,
    update: CentroidUpdate,
    data: LloydData,
) -> Result<KMeansResult> {
    if update == CentroidUpdate::All && data == LloydData::UnlabeledOnly {
        return Err(NcdError::invalid(
            "refitting known centroids while iterating only on unlabeled data \
             is not a defined mode",
        ));
    }
    let n_u = unlabeled.n();
    if n_u == 0 {
        return Err(NcdError::invalid("no unlabeled instances to cluster"));
    }
    if k == 0 {
        return Err(NcdError::invalid("number of novel clusters must be positive"));
    }
    if k > n_u {
        return Err(NcdError::invalid(format!(
            "cannot form {k} novel clusters from {n_u} unlabeled points"
        )));
    }
    if n_init == 0 {
        return Err(NcdError::invalid("n_init must be positive"));
    }
    if labeled.d() != unlabeled.d() {
        return Err(NcdError::invalid(format!(
            "labeled data has {} features but unlabeled has {}",
            labeled.d(),
            unlabeled.d()
        )));
    }

    let known = class_means(labeled)?;
    let c_l = known.nrows();
    let x_u = unlabeled.x.view();
    let cfg = KMeansConfig::default();

    let joint;
    let lloyd_x: ArrayView2<f64> = match data {
        LloydData::UnlabeledOnly => x_u,
        LloydData::All => {
            joint = ndarray::concatenate(Axis(0), &[labeled.x.view(), x_u])
                .map_err(|e| NcdError::Numeric(e.to_string()))?;
            joint.view()
        }
    };

    let mut best: Option<(f64, KMeansResult)> = None;
    for r in 0..n_init {
        let restart_seed = derive_seed(seed, r as u64);
        let novel = seed_novel_centroids(x_u, &known, k, restart_seed)?;

        let (objective, novel_final, n_iter, converged) = match (update, data) {
            (CentroidUpdate::NovelOnly, LloydData::UnlabeledOnly) => {
                let out = lloyd(x_u, novel, 0, cfg.max_iter, cfg.tol);
                (out.inertia, out.centroids, out.n_iter, out.converged)
            }
            _ => {
                let mut all = Array2::zeros((c_l + k, known.ncols()));
                all.slice_mut(s![..c_l, ..]).assign(&known);
                all.slice_mut(s![c_l.., ..]).assign(&novel);
                let mutable_from = match update {
                    CentroidUpdate::NovelOnly => c_l,
                    CentroidUpdate::All => 0,
                };
                let out = lloyd(lloyd_x, all, mutable_from, cfg.max_iter, cfg.tol);
                if update == CentroidUpdate::NovelOnly {
                    // Frozen block must still be the exact class means.
                    debug_assert_eq!(out.centroids.slice(s![..c_l, ..]), known);
                }
                (
                    out.inertia,
                    out.centroids.slice(s![c_l.., ..]).to_owned(),
                    out.n_iter,
                    out.converged,
                )
            }
        };

        // The final discovery output always partitions the unlabeled data
        // with the novel centroids alone. Restarts are compared on the mode's
        // optimization objective, which for the standard mode is this same
        // quantity.
        let mut assign = vec![0usize; n_u];
        let mut d2min = vec![0.0f64; n_u];
        let inertia =
            super::kmeans::assign_nearest(x_u, novel_final.view(), &mut assign, &mut d2min);
        if best.as_ref().map_or(true, |(obj, _)| objective < *obj) {
            best = Some((
                objective,
                KMeansResult {
                    assignment: Partition::from_dense(assign, k)?,
                    centroids: novel_final,
                    inertia,
                    n_iter,
                    converged,
                },
            ));
        }
    }
    Ok(best.expect("at least one restart").1)
}

/// Draws `k` novel centroids from the unlabeled points, each with probability
/// proportional to squared distance from the nearest centroid chosen so far,
/// where "so far" starts at the known-class means.
fn seed_novel_centroids(
    x_u: ArrayView2<f64>,
    known: &Array2<f64>,
    k: usize,
    seed: u64,
) -> Result<Array2<f64>> {
    let c_l = known.nrows();
    let d = known.ncols();
    let mut existing = Array2::zeros((c_l + k, d));
    existing.slice_mut(s![..c_l, ..]).assign(known);
    for j in 0..k {
        let idx = kmeanspp_next(
            x_u,
            existing.slice(s![..c_l + j, ..]),
            derive_seed(seed, j as u64),
        )?;
        existing.row_mut(c_l + j).assign(&x_u.row(idx));
    }
    Ok(existing.slice(s![c_l.., ..]).to_owned())
}
