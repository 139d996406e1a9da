//! Novel class discovery (NCD) for tabular data.
//!
//! The NCD setting starts from a labeled set of *known* classes and an
//! unlabeled set drawn from disjoint *novel* classes, and asks for a partition
//! of the unlabeled data into its (possibly unknown number of) classes. This
//! crate implements:
//!
//! - [`cluster::ncd_kmeans`]: k-means whose initialization repels novel
//!   centroids away from the known-class means (the known centroids stay
//!   frozen and only seed the initialization).
//! - [`cluster::ncd_sc_optimize`]: spectral clustering whose kernel bandwidth
//!   and embedding width are selected by a supervised search scored with the
//!   ARI of the known classes.
//! - [`pbn`]: a projection-based model (encoder + classifier + decoder)
//!   trained with a weighted classification + reconstruction loss, whose
//!   latent space is then clustered; plus the classifier-only baseline.
//! - [`metrics`]: clustering agreement scores (ACC via optimal assignment,
//!   NMI, ARI) and the cluster validity indices used to estimate the number
//!   of novel classes.
//! - [`tune`]: hidden-class k-fold evaluation of hyperparameter combos that
//!   never touches novel-class labels, plus random search over the
//!   documented spaces.
//! - [`data`]: CSV ingestion, standardization, known/novel/hidden splits with
//!   sealed novel labels, dataset manifests and prepared bundles.
//!
//! All randomness flows from explicit seeds through [`derive_seed`], so every
//! result in the crate is reproducible run-to-run.

pub mod cluster;
pub mod data;
pub mod metrics;
pub mod pbn;
pub mod tune;

mod error;
mod seeding;

pub use error::{NcdError, Result};
pub use seeding::derive_seed;
