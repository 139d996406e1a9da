//! Projection-based discovery: learn a latent space on all the data, then
//! cluster the unlabeled rows inside it.
//!
//! A bottleneck encoder feeds two heads trained jointly: a classifier over
//! the known classes and a decoder reconstructing the input. The combined
//! loss `w * ce + (1 - w) * mse` keeps the latent space faithful to every
//! feature, including those the known classes never exercise. A
//! classifier-only baseline with the same architecture shows what the
//! reconstruction term buys.

mod baseline;
mod discover;
mod model;
mod serialize;
mod train;

pub use baseline::{baseline_cluster, baseline_project, baseline_train, BaselineModel};
pub use discover::{cluster_latent, LatentBackend};
pub use model::{init_model, project, PBNConfig, PBNModel};
pub use train::{loss_ce, loss_mse, loss_pbn, train, TrainReport};
