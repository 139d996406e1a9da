//! Spectral clustering for novel class discovery, with the bandwidth and
//! embedding dimension selected by random search against the known classes.
//!
//! Each candidate (s_min, u) embeds the labeled and unlabeled data jointly,
//! clusters the embedding into known-plus-novel many groups, and is scored by
//! adjusted Rand index on the labeled rows alone, so the ground truth of the
//! unlabeled side is never consulted. The winning embedding is then clustered
//! once more, restricted to its unlabeled rows, to produce the novel
//! partition.

use ndarray::{s, Array2, Axis};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::cluster::dists::pairwise_sq_dists;
use crate::cluster::kmeans::{kmeans, KMeansConfig};
use crate::cluster::mst::mst_longest_edge_from_d2;
use crate::cluster::spectral::{
    embed_normalized_affinity, fill_gaussian_from_d2, normalized_affinity_in_place, SCParams,
};
use crate::data::Dataset;
use crate::error::{NcdError, Result};
use crate::metrics::{ari, Partition};
use crate::seeding::derive_seed;

/// Largest embedding dimension the random search will draw.
const MAX_U: usize = 200;

#[derive(Debug, Clone)]
pub struct NcdScOptions {
    /// Normalize embedding rows to unit length before k-means.
    pub row_normalize: bool,
    /// Cap on the joint point count; beyond it a stratified subsample is
    /// clustered instead and the rest of the data is left unassigned.
    pub max_points: Option<usize>,
    /// k-means settings for both the scoring and the final clustering.
    pub kmeans: KMeansConfig,
}

impl Default for NcdScOptions {
    fn default() -> Self {
        Self {
            row_normalize: true,
            max_points: None,
            kmeans: KMeansConfig::default(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct NcdScResult {
    /// Parameters of the winning candidate.
    pub params: SCParams,
    /// Position of the winner in the sampled candidate list.
    pub combo_index: usize,
    /// Adjusted Rand index of the winner on the labeled rows.
    pub labeled_ari: f64,
    /// Partition of the retained unlabeled rows into `k` novel clusters.
    pub assignment: Partition,
    /// Original unlabeled row indices the assignment refers to; the identity
    /// unless subsampling was in effect.
    pub unlabeled_indices: Vec<usize>,
}

/// Random search over (s_min, u) followed by novel-cluster extraction, with
/// default options.
///
/// Draws `n_opt` candidates: `s_min` uniform on the open unit interval and
/// `u` uniform on `1..=min(200, n)`. Candidates are scored independently
/// (and in parallel; seeding is per-candidate so the result is identical for
/// any thread count), ties break toward the earliest candidate.
pub fn ncd_sc_optimize(
    labeled: &Dataset,
    unlabeled: &Dataset,
    k: usize,
    n_opt: usize,
    seed: u64,
) -> Result<NcdScResult> {
    ncd_sc_optimize_opts(labeled, unlabeled, k, n_opt, seed, &NcdScOptions::default())
}

pub fn ncd_sc_optimize_opts(
    labeled: &Dataset,
    unlabeled: &Dataset,
    k: usize,
    n_opt: usize,
    seed: u64,
    opts: &NcdScOptions,
) -> Result<NcdScResult> {
    let y_l = labeled.labels()?;
    let distinct = {
        let mut seen = std::collections::BTreeSet::new();
        for &l in y_l {
            seen.insert(l);
        }
        seen.len()
    };
    if distinct < 2 {
        return Err(NcdError::invalid(
            "parameter search needs at least two known classes to score against",
        ));
    }
    if unlabeled.n() == 0 {
        return Err(NcdError::invalid("no unlabeled instances to cluster"));
    }
    if k == 0 {
        return Err(NcdError::invalid("number of novel clusters must be positive"));
    }
    if n_opt == 0 {
        return Err(NcdError::invalid("need at least one candidate to evaluate"));
    }
    if labeled.d() != unlabeled.d() {
        return Err(NcdError::invalid(format!(
            "labeled data has {} features but unlabeled has {}",
            labeled.d(),
            unlabeled.d()
        )));
    }
    let c_l = labeled.class_names.len();

    // Optionally shrink to a stratified subsample before any heavy work.
    let (labeled_keep, unlabeled_keep) =
        subsample_plan(labeled, unlabeled.n(), opts.max_points, seed)?;
    let x_l = labeled.x.select(Axis(0), &labeled_keep);
    let y_l: Vec<usize> = labeled_keep.iter().map(|&i| y_l[i]).collect();
    let x_u = unlabeled.x.select(Axis(0), &unlabeled_keep);
    let n_l = x_l.nrows();
    let n_u = x_u.nrows();
    let n = n_l + n_u;
    if k > n_u {
        return Err(NcdError::invalid(format!(
            "cannot form {k} novel clusters from {n_u} retained unlabeled points"
        )));
    }
    if k + c_l > n {
        return Err(NcdError::invalid(format!(
            "scoring needs {k} novel plus {c_l} known clusters but only {n} points"
        )));
    }

    let x = ndarray::concatenate(Axis(0), &[x_l.view(), x_u.view()])
        .map_err(|e| NcdError::Numeric(e.to_string()))?;
    let d2 = pairwise_sq_dists(x.view());
    let (d_max, _) = mst_longest_edge_from_d2(&d2)?;

    // Candidate parameters are drawn up front so evaluation order is free.
    let mut candidates = Vec::with_capacity(n_opt);
    for i in 0..n_opt {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, 1 + i as u64));
        let s_min = loop {
            let v: f64 = rng.random_range(0.0..1.0);
            if v > 0.0 {
                break v;
            }
        };
        let u = rng.random_range(1..=MAX_U.min(n));
        candidates.push(SCParams::derive(s_min, u, d_max)?);
    }

    let truth = Partition::from_labels(&y_l);
    // Each worker reuses one kernel buffer across the candidates it scores;
    // the buffer is fully overwritten per candidate, so results stay bitwise
    // independent of the thread count.
    let scored: Vec<Result<f64>> = candidates
        .par_iter()
        .enumerate()
        .map_init(
            || Array2::<f64>::zeros((n, n)),
            |scratch, (i, params)| {
                let (emb, _) = embed_candidate(&d2, params, opts.row_normalize, scratch)?;
                let km = kmeans(
                    emb.view(),
                    k + c_l,
                    &opts.kmeans,
                    derive_seed(derive_seed(seed, 1 + i as u64), 1),
                    None,
                )?;
                let pred = Partition::from_labels(&km.assignment.labels()[..n_l]);
                ari(&truth, &pred)
            },
        )
        .collect();

    let mut best: Option<(usize, f64)> = None;
    for (i, r) in scored.into_iter().enumerate() {
        let score = r?;
        if best.map_or(true, |(_, b)| score > b) {
            best = Some((i, score));
        }
    }
    let (combo_index, labeled_ari) = best.expect("n_opt >= 1");
    let params = candidates[combo_index].clone();

    // Re-derive the winning embedding (identical by construction) and
    // cluster its unlabeled rows into the novel groups.
    let mut scratch = Array2::<f64>::zeros((n, n));
    let (emb, _) = embed_candidate(&d2, &params, opts.row_normalize, &mut scratch)?;
    drop(scratch);
    let unlabeled_emb = emb.slice(s![n_l.., ..]).to_owned();
    let km = kmeans(
        unlabeled_emb.view(),
        k,
        &opts.kmeans,
        derive_seed(derive_seed(seed, 1 + combo_index as u64), 2),
        None,
    )?;

    Ok(NcdScResult {
        params,
        combo_index,
        labeled_ari,
        assignment: km.assignment,
        unlabeled_indices: unlabeled_keep,
    })
}

fn embed_candidate(
    d2: &Array2<f64>,
    params: &SCParams,
    row_normalize: bool,
    scratch: &mut Array2<f64>,
) -> Result<(Array2<f64>, Vec<f64>)> {
    fill_gaussian_from_d2(d2, params.derived_sigma, scratch)?;
    normalized_affinity_in_place(scratch);
    embed_normalized_affinity(scratch.view(), params.u, row_normalize)
}

/// Chooses which rows to keep under a point cap: labeled rows per class in
/// proportion (at least one per class) and unlabeled rows uniformly, both by
/// a seeded shuffle. Without a cap everything is kept.
fn subsample_plan(
    labeled: &Dataset,
    n_unlabeled: usize,
    max_points: Option<usize>,
    seed: u64,
) -> Result<(Vec<usize>, Vec<usize>)> {
    let n_l = labeled.n();
    let total = n_l + n_unlabeled;
    let cap = match max_points {
        Some(cap) if cap < total => cap,
        _ => {
            return Ok(((0..n_l).collect(), (0..n_unlabeled).collect()));
        }
    };
    let y = labeled.labels()?;
    let c = labeled.class_names.len();
    if cap < c + 1 {
        return Err(NcdError::invalid(format!(
            "point cap {cap} cannot cover {c} known classes plus unlabeled data"
        )));
    }
    let frac = cap as f64 / total as f64;

    let mut by_class: Vec<Vec<usize>> = vec![Vec::new(); c];
    for (i, &l) in y.iter().enumerate() {
        by_class[l].push(i);
    }
    let mut labeled_keep = Vec::new();
    for (cls, members) in by_class.iter().enumerate() {
        if members.is_empty() {
            continue;
        }
        let want = ((members.len() as f64 * frac).round() as usize)
            .max(1)
            .min(members.len());
        let mut order = members.clone();
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(derive_seed(seed, 0), cls as u64));
        shuffle(&mut order, &mut rng);
        labeled_keep.extend(order.into_iter().take(want));
    }
    labeled_keep.sort_unstable();

    let want_u = cap.saturating_sub(labeled_keep.len()).max(1).min(n_unlabeled);
    let mut order: Vec<usize> = (0..n_unlabeled).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(derive_seed(seed, 0), c as u64));
    shuffle(&mut order, &mut rng);
    let mut unlabeled_keep: Vec<usize> = order.into_iter().take(want_u).collect();
    unlabeled_keep.sort_unstable();
    Ok((labeled_keep, unlabeled_keep))
}

fn shuffle(v: &mut [usize], rng: &mut ChaCha8Rng) {
    for i in (1..v.len()).rev() {
        let j = rng.random_range(0..=i);
        v.swap(i, j);
    }
}
