//! Second stage of the method: cluster the projected unlabeled rows.

use ndarray::ArrayView2;

use crate::cluster::{kmeans, spectral_clustering, KMeansConfig};
use crate::error::Result;
use crate::metrics::Partition;

/// Clustering backend for latent rows.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LatentBackend {
    /// k-means with 10 restarts.
    KMeans,
    /// Spectral clustering at the default graph parameters: `s_min = 0.6`
    /// and an embedding as wide as the cluster count.
    ScDefault,
}

/// Partitions latent rows into `k` clusters.
pub fn cluster_latent(
    z_u: ArrayView2<f64>,
    k: usize,
    backend: LatentBackend,
    seed: u64,
) -> Result<Partition> {
    match backend {
        LatentBackend::KMeans => {
            Ok(kmeans(z_u, k, &KMeansConfig::default(), seed, None)?.assignment)
        }
        LatentBackend::ScDefault => Ok(spectral_clustering(z_u, k, 0.6, k, seed)?.0),
    }
}
