use super::Dataset;
use crate::{derive_seed, NcdError, Result};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

/// One isotropic Gaussian blob.
#[derive(Debug, Clone, PartialEq)]
pub struct BlobSpec {
    pub center: Vec<f64>,
    pub n: usize,
    pub std: f64,
}

impl BlobSpec {
    pub fn new(center: Vec<f64>, n: usize, std: f64) -> Self {
        BlobSpec { center, n, std }
    }
}

/// Samples labeled Gaussian blobs, one class per spec, deterministic in the
/// seed. Rows are grouped by blob in spec order.
pub fn make_blobs(specs: &[BlobSpec], seed: u64) -> Result<Dataset> {
    if specs.is_empty() {
        return Err(NcdError::invalid("no blobs specified"));
    }
    let d = specs[0].center.len();
    if d == 0 {
        return Err(NcdError::invalid("blob centers need at least one dimension"));
    }
    if specs.iter().any(|s| s.center.len() != d) {
        return Err(NcdError::invalid("blob centers have mixed dimensions"));
    }
    if specs.iter().any(|s| s.n == 0 || s.std < 0.0 || !s.std.is_finite()) {
        return Err(NcdError::invalid("blob needs n > 0 and a finite std >= 0"));
    }

    let n: usize = specs.iter().map(|s| s.n).sum();
    let mut x = ndarray::Array2::zeros((n, d));
    let mut y = Vec::with_capacity(n);
    let mut row = 0;
    for (b, spec) in specs.iter().enumerate() {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, b as u64));
        let noise = Normal::new(0.0, spec.std.max(f64::MIN_POSITIVE)).expect("finite std");
        for _ in 0..spec.n {
            for (j, &c) in spec.center.iter().enumerate() {
                let eps = if spec.std > 0.0 { noise.sample(&mut rng) } else { 0.0 };
                x[[row, j]] = c + eps;
            }
            y.push(b);
            row += 1;
        }
    }

    Dataset::new(
        x,
        Some(y),
        (0..d).map(|j| format!("f{j}")).collect(),
        (0..specs.len()).map(|b| format!("blob{b}")).collect(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn specs() -> Vec<BlobSpec> {
        vec![
            BlobSpec::new(vec![0.0, 0.0], 30, 0.2),
            BlobSpec::new(vec![5.0, 5.0], 20, 0.2),
        ]
    }

    #[test]
    fn shapes_labels_and_determinism() {
        let a = make_blobs(&specs(), 42).unwrap();
        assert_eq!(a.n(), 50);
        assert_eq!(a.d(), 2);
        assert_eq!(a.labels().unwrap()[..30], vec![0; 30][..]);
        assert_eq!(a.labels().unwrap()[30..], vec![1; 20][..]);
        let b = make_blobs(&specs(), 42).unwrap();
        assert_eq!(a.x, b.x);
        let c = make_blobs(&specs(), 43).unwrap();
        assert_ne!(a.x, c.x);
    }

    #[test]
    fn samples_cluster_around_centers() {
        let ds = make_blobs(&specs(), 7).unwrap();
        for i in 0..30 {
            let r = ds.x.row(i);
            assert!(r[0].abs() < 2.0 && r[1].abs() < 2.0);
        }
        for i in 30..50 {
            let r = ds.x.row(i);
            assert!((r[0] - 5.0).abs() < 2.0 && (r[1] - 5.0).abs() < 2.0);
        }
    }

    #[test]
    fn zero_std_gives_exact_centers() {
        let ds = make_blobs(&[BlobSpec::new(vec![1.5], 3, 0.0)], 0).unwrap();
        assert!(ds.x.iter().all(|&v| v == 1.5));
    }

    #[test]
    fn rejects_degenerate_specs() {
        assert!(make_blobs(&[], 0).is_err());
        assert!(make_blobs(&[BlobSpec::new(vec![], 2, 1.0)], 0).is_err());
        assert!(make_blobs(&[BlobSpec::new(vec![0.0], 0, 1.0)], 0).is_err());
        let mixed = vec![
            BlobSpec::new(vec![0.0], 2, 1.0),
            BlobSpec::new(vec![0.0, 1.0], 2, 1.0),
        ];
        assert!(make_blobs(&mixed, 0).is_err());
    }
}
