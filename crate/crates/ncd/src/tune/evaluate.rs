//! Scoring one hyperparameter combo with hidden-class folds.
//!
//! Each fold moves a few known classes to the unlabeled side, retrains from
//! scratch, clusters the enlarged unlabeled set, and scores only the rows
//! whose classes were hidden. Their labels came from the labeled side, so
//! the protocol never reads the sealed novel labels; selection quality is
//! measured entirely on classes the model was told to forget.

use std::time::Instant;

use ndarray::{s, Array2, ArrayView2};
use serde::Serialize;

use crate::data::{hide_classes, NCDSplit};
use crate::metrics::{ari, clustering_accuracy, nmi, Partition};
use crate::pbn::{
    baseline_project, baseline_train, cluster_latent, project, train, BaselineModel,
    LatentBackend, PBNConfig, PBNModel,
};
use crate::seeding::derive_seed;
use crate::tune::{estimate_k, km_acc_estimate, CviKind, EstimationMethod, FoldSpec};
use crate::{NcdError, Result};

/// Which trainable method the tuning run drives.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum TuneMethod {
    /// Joint classifier + reconstruction projection.
    Pbn,
    /// Classifier-only baseline (ignores unlabeled rows and `w`).
    Baseline,
}

impl std::str::FromStr for TuneMethod {
    type Err = NcdError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "pbn" => Ok(TuneMethod::Pbn),
            "baseline" => Ok(TuneMethod::Baseline),
            other => Err(NcdError::invalid(format!("unknown tuning method {other:?}"))),
        }
    }
}

/// One sampled hyperparameter setting. `w` weighs classification against
/// reconstruction and is ignored by [`TuneMethod::Baseline`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Combo {
    pub latent_dim: usize,
    pub lr: f64,
    pub dropout: f64,
    pub w: f64,
}

impl Combo {
    /// Training config for this combo with the protocol's fixed epoch and
    /// batch budget.
    pub fn config(&self, seed: u64) -> PBNConfig {
        PBNConfig::new(self.latent_dim, self.lr, self.dropout, self.w, seed)
    }
}

/// Scores for one fold, all computed on the hidden-class rows only.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FoldResult {
    pub fold_id: usize,
    pub acc_hidden: f64,
    pub ari_hidden: f64,
    pub nmi_hidden: f64,
    /// The estimated novel-class count, when an estimator ran.
    pub estimated_k_prime: Option<usize>,
    pub wall_secs: f64,
}

/// A combo's fold scores and their means.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComboEvaluation {
    pub mean_acc_hidden: f64,
    pub mean_ari_hidden: f64,
    pub mean_nmi_hidden: f64,
    pub folds: Vec<FoldResult>,
}

enum Trained {
    Pbn(PBNModel),
    Baseline(BaselineModel),
}

impl Trained {
    fn project(&self, x: ArrayView2<f64>) -> Result<Array2<f64>> {
        match self {
            Trained::Pbn(m) => project(m, x),
            Trained::Baseline(m) => baseline_project(m, x),
        }
    }
}

/// Evaluates `combo` across `folds` on `split`.
///
/// Per fold: hide the fold's classes, train `method` on what remains, then
/// cluster every unlabeled row in the latent space into
/// `n_hidden_classes + k'` groups, where `k'` is either the estimator's
/// count of the original novel rows or the split's known novel-class count.
/// Scores compare the hidden rows' predicted groups against their held-back
/// labels. Any failure inside a fold (training divergence, no knee, invalid
/// combo) fails the whole combo.
pub fn evaluate_combo(
    split: &NCDSplit,
    method: TuneMethod,
    combo: &Combo,
    folds: &[FoldSpec],
    estimate: Option<&EstimationMethod>,
) -> Result<ComboEvaluation> {
    if folds.is_empty() {
        return Err(NcdError::invalid("no folds to evaluate"));
    }
    let folds: Vec<FoldResult> = folds
        .iter()
        .map(|fold| run_fold(split, method, combo, fold, estimate))
        .collect::<Result<_>>()?;
    let mean = |f: fn(&FoldResult) -> f64| {
        folds.iter().map(f).sum::<f64>() / folds.len() as f64
    };
    Ok(ComboEvaluation {
        mean_acc_hidden: mean(|r| r.acc_hidden),
        mean_ari_hidden: mean(|r| r.ari_hidden),
        mean_nmi_hidden: mean(|r| r.nmi_hidden),
        folds,
    })
}

fn run_fold(
    split: &NCDSplit,
    method: TuneMethod,
    combo: &Combo,
    fold: &FoldSpec,
    estimate: Option<&EstimationMethod>,
) -> Result<FoldResult> {
    let start = Instant::now();
    let fold_split = hide_classes(split, &fold.hidden_classes)?;
    let cfg = combo.config(fold.seed);
    let trained = match method {
        TuneMethod::Pbn => {
            Trained::Pbn(train(&fold_split.labeled, &fold_split.unlabeled, &cfg)?.0)
        }
        TuneMethod::Baseline => Trained::Baseline(baseline_train(&fold_split.labeled, &cfg)?.0),
    };
    let z_all = trained.project(fold_split.unlabeled.x.view())?;

    // hide_classes appends the hidden rows, so the original novel rows are
    // the prefix; estimators must only ever see those.
    let n_hidden_rows = fold_split.hidden.as_ref().map_or(0, |h| h.n());
    let n_u = fold_split.unlabeled.n() - n_hidden_rows;

    let k_prime = match estimate {
        None => split.c_u_true.ok_or_else(|| {
            NcdError::invalid("novel-class count unknown; supply an estimation method")
        })?,
        Some(m) => {
            let est_seed = derive_seed(fold.seed, 2);
            let z_u = z_all.slice(s![..n_u, ..]);
            if m.kind == CviKind::KmAcc {
                let z_l = trained.project(fold_split.labeled.x.view())?;
                let cap = (z_l.nrows() + n_u).saturating_sub(fold_split.c_l);
                let range = shrink_range(m.k_range, cap, m.kind)?;
                km_acc_estimate(z_l.view(), fold_split.labeled.labels()?, z_u, range, est_seed)?
            } else {
                let range = shrink_range(m.k_range, n_u.saturating_sub(1), m.kind)?;
                let capped = EstimationMethod { kind: m.kind, k_range: range };
                estimate_k(z_u, &capped, est_seed)?
            }
        }
    };

    let k = fold.hidden_classes.len() + k_prime;
    let part = cluster_latent(z_all.view(), k, LatentBackend::KMeans, derive_seed(fold.seed, 3))?;

    let hidden = fold_split.hidden.as_ref().expect("hide_classes always sets hidden");
    let truth = Partition::from_labels(hidden.labels()?);
    let pred = Partition::from_labels(&part.labels()[n_u..]);
    Ok(FoldResult {
        fold_id: fold.fold_id,
        acc_hidden: clustering_accuracy(&truth, &pred)?,
        ari_hidden: ari(&truth, &pred)?,
        nmi_hidden: nmi(&truth, &pred)?,
        estimated_k_prime: estimate.map(|_| k_prime),
        wall_secs: start.elapsed().as_secs_f64(),
    })
}

/// Caps a candidate range at what the fold's row count can support.
fn shrink_range(range: (usize, usize), cap: usize, kind: CviKind) -> Result<(usize, usize)> {
    let hi = range.1.min(cap);
    if range.0 > hi {
        return Err(NcdError::invalid(format!(
            "{} needs at least {} candidates but the fold supports {hi}",
            kind.name(),
            range.0
        )));
    }
    Ok((range.0, hi))
}
