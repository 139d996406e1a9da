//! Hyperparameter tuning without novel-class labels.
//!
//! Novel classes have no labels to validate against, so this module scores
//! hyperparameters by proxy: each fold hides a few *known* classes, mixes
//! them into the unlabeled pool, retrains, and checks how well clustering
//! rediscovers them ([`evaluate_combo`]). A random search over the
//! documented parameter spaces ranks combos by mean hidden-class ARI
//! ([`random_search`]), cluster counts come from validity-index sweeps when
//! the truth is unknown ([`estimate_k`]), and [`correlation_report`]
//! measures after the fact how well the proxy tracked real novel-class
//! performance.

mod correlate;
mod estimate;
mod evaluate;
mod folds;
mod search;

pub use correlate::{correlation_report, CorrelationReport};
pub use estimate::{estimate_k, km_acc_estimate, CviKind, EstimationMethod};
pub use evaluate::{evaluate_combo, Combo, ComboEvaluation, FoldResult, TuneMethod};
pub use folds::{make_folds, FoldSpec};
pub use search::{
    random_search, ComboOutcome, HyperparamSpace, LeaderboardEntry, ParamDist, ParamSpec,
    SearchResult,
};
