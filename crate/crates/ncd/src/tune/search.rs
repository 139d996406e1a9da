//! Random search over hyperparameter spaces, ranked by hidden-class ARI.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::data::NCDSplit;
use crate::seeding::derive_seed;
use crate::tune::{evaluate_combo, Combo, ComboEvaluation, EstimationMethod, FoldSpec, TuneMethod};
use crate::{NcdError, Result};

/// How one parameter is drawn.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum ParamDist {
    Uniform { lo: f64, hi: f64 },
    LogUniform { lo: f64, hi: f64 },
    IntUniform { lo: usize, hi: usize },
}

impl ParamDist {
    fn sample(&self, rng: &mut ChaCha8Rng) -> Result<f64> {
        match *self {
            ParamDist::Uniform { lo, hi } => {
                if !(lo <= hi) || !lo.is_finite() || !hi.is_finite() {
                    return Err(NcdError::invalid(format!("bad uniform range [{lo}, {hi}]")));
                }
                Ok(rng.random_range(lo..=hi))
            }
            ParamDist::LogUniform { lo, hi } => {
                if !(0.0 < lo && lo <= hi) || !hi.is_finite() {
                    return Err(NcdError::invalid(format!("bad log-uniform range [{lo}, {hi}]")));
                }
                Ok(rng.random_range(lo.ln()..=hi.ln()).exp())
            }
            ParamDist::IntUniform { lo, hi } => {
                if lo > hi {
                    return Err(NcdError::invalid(format!("bad integer range [{lo}, {hi}]")));
                }
                Ok(rng.random_range(lo..=hi) as f64)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ParamSpec {
    pub name: String,
    pub dist: ParamDist,
}

/// The parameters a search draws, in draw order.
///
/// The stock constructors cover the two trainable methods: latent width is
/// integer-uniform over `[5, d]`, learning rate log-uniform over
/// `[1e-4, 0.1]`, dropout uniform over `[0, 0.6]`, and (projection only)
/// the loss weight `w` uniform over `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HyperparamSpace {
    pub params: Vec<ParamSpec>,
}

impl HyperparamSpace {
    /// Space for the joint projection method (4 parameters).
    pub fn pbn(d: usize) -> Result<Self> {
        let mut space = Self::baseline(d)?;
        space.params.push(ParamSpec {
            name: "w".into(),
            dist: ParamDist::Uniform { lo: 0.0, hi: 1.0 },
        });
        Ok(space)
    }

    /// Space for the classifier-only baseline (3 parameters, no `w`).
    pub fn baseline(d: usize) -> Result<Self> {
        if d < 5 {
            return Err(NcdError::invalid(format!(
                "latent range is [5, d] but the data has only {d} features"
            )));
        }
        Ok(HyperparamSpace {
            params: vec![
                ParamSpec { name: "latent_dim".into(), dist: ParamDist::IntUniform { lo: 5, hi: d } },
                ParamSpec {
                    name: "lr".into(),
                    dist: ParamDist::LogUniform { lo: 1e-4, hi: 0.1 },
                },
                ParamSpec { name: "dropout".into(), dist: ParamDist::Uniform { lo: 0.0, hi: 0.6 } },
            ],
        })
    }

    /// Draws one combo. Parameters are drawn in declaration order from a
    /// generator seeded only by `seed`, so a combo is reproducible without
    /// replaying the rest of the search. Absent parameters keep defaults
    /// (`w = 0.5`, unused by the baseline).
    pub fn sample_combo(&self, seed: u64) -> Result<Combo> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut latent_dim = None;
        let mut lr = None;
        let mut dropout = None;
        let mut w = None;
        for p in &self.params {
            let v = p.dist.sample(&mut rng)?;
            match p.name.as_str() {
                "latent_dim" => latent_dim = Some(v as usize),
                "lr" => lr = Some(v),
                "dropout" => dropout = Some(v),
                "w" => w = Some(v),
                other => {
                    return Err(NcdError::invalid(format!("unknown parameter {other:?}")));
                }
            }
        }
        Ok(Combo {
            latent_dim: latent_dim
                .ok_or_else(|| NcdError::invalid("space does not draw latent_dim"))?,
            lr: lr.ok_or_else(|| NcdError::invalid("space does not draw lr"))?,
            dropout: dropout.ok_or_else(|| NcdError::invalid("space does not draw dropout"))?,
            w: w.unwrap_or(0.5),
        })
    }
}

/// A combo's outcome: scored, or failed with the error it hit.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum ComboOutcome {
    Scored(ComboEvaluation),
    Failed(String),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LeaderboardEntry {
    /// Index in sampling order; `derive_seed(search_seed, index)` re-draws
    /// the combo.
    pub combo_index: usize,
    pub combo: Combo,
    pub outcome: ComboOutcome,
}

impl LeaderboardEntry {
    pub fn mean_ari_hidden(&self) -> Option<f64> {
        match &self.outcome {
            ComboOutcome::Scored(eval) => Some(eval.mean_ari_hidden),
            ComboOutcome::Failed(_) => None,
        }
    }
}

/// Every combo tried, best first. Failed combos sink to the bottom.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SearchResult {
    pub leaderboard: Vec<LeaderboardEntry>,
}

impl SearchResult {
    /// The winning entry. Construction guarantees at least one scored combo,
    /// sorted to the front.
    pub fn best(&self) -> &LeaderboardEntry {
        &self.leaderboard[0]
    }
}

/// Draws `n_combos` settings i.i.d. from `space` and evaluates each with
/// [`evaluate_combo`], in parallel. Returns the full leaderboard sorted by
/// mean hidden-class ARI (descending; ties break toward the earlier draw).
/// Combos that fail any fold are kept in the leaderboard with their error
/// but never win; if every combo fails the search itself fails.
pub fn random_search(
    split: &NCDSplit,
    method: TuneMethod,
    space: &HyperparamSpace,
    n_combos: usize,
    folds: &[FoldSpec],
    estimate: Option<&EstimationMethod>,
    seed: u64,
) -> Result<SearchResult> {
    if n_combos == 0 {
        return Err(NcdError::invalid("need at least one combo"));
    }
    if folds.is_empty() {
        return Err(NcdError::invalid("need at least one fold"));
    }
    let combos: Vec<Combo> = (0..n_combos)
        .map(|i| space.sample_combo(derive_seed(seed, i as u64)))
        .collect::<Result<_>>()?;

    let mut leaderboard: Vec<LeaderboardEntry> = combos
        .into_par_iter()
        .enumerate()
        .map(|(combo_index, combo)| {
            let outcome = match evaluate_combo(split, method, &combo, folds, estimate) {
                Ok(eval) => ComboOutcome::Scored(eval),
                Err(e) => ComboOutcome::Failed(e.to_string()),
            };
            LeaderboardEntry { combo_index, combo, outcome }
        })
        .collect();

    if leaderboard.iter().all(|e| matches!(e.outcome, ComboOutcome::Failed(_))) {
        let first = leaderboard
            .iter()
            .find_map(|e| match &e.outcome {
                ComboOutcome::Failed(msg) => Some(msg.clone()),
                ComboOutcome::Scored(_) => None,
            })
            .unwrap_or_default();
        return Err(NcdError::invalid(format!("every combo failed; first error: {first}")));
    }

    leaderboard.sort_by(|a, b| {
        match (a.mean_ari_hidden(), b.mean_ari_hidden()) {
            (Some(x), Some(y)) => y
                .partial_cmp(&x)
                .unwrap_or(std::cmp::Ordering::Equal)
                .then(a.combo_index.cmp(&b.combo_index)),
            (Some(_), None) => std::cmp::Ordering::Less,
            (None, Some(_)) => std::cmp::Ordering::Greater,
            (None, None) => a.combo_index.cmp(&b.combo_index),
        }
    });
    Ok(SearchResult { leaderboard })
}
