//! Clustering: k-means, spectral clustering, and their novel-class variants.
//!
//! The discovery setting splits a dataset into labeled known classes and
//! unlabeled data drawn from different, novel classes. Both variants here use
//! the known side without ever clustering it into the output: NCD k-means
//! anchors its seeding on the known class means, and NCD spectral clustering
//! scores candidate graph parameters by how well the joint embedding
//! reconstructs the known classes.

mod dists;
mod eigen;
mod kmeans;
mod mst;
mod ncd_kmeans;
mod ncd_sc;
mod spectral;

pub use kmeans::{class_means, kmeans, kmeanspp_next, KMeansConfig, KMeansResult};
pub use mst::mst_longest_edge;
pub use ncd_kmeans::{ncd_kmeans, ncd_kmeans_mode, CentroidUpdate, LloydData};
pub use ncd_sc::{ncd_sc_optimize, ncd_sc_optimize_opts, NcdScOptions, NcdScResult};
pub use spectral::{
    gaussian_adjacency, sigma_from_smin, spectral_artifacts, spectral_clustering,
    spectral_clustering_opts, spectral_embedding, spectral_embedding_opts,
    sym_normalized_laplacian, Laplacian, SCParams, SpectralArtifacts, SpectralOptions,
};

pub(crate) use dists::pairwise_sq_dists;
