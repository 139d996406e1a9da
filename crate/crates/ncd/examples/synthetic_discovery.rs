//! Runs the discovery methods on synthetic Gaussian classes and prints the
//! quality of the recovered novel-class partition.
//!
//! Three known classes train the centroids; three held-out classes play the
//! novel set. Every method should recover the novel structure almost exactly
//! on data this well separated.

use ncd::cluster::{ncd_kmeans, ncd_sc_optimize};
use ncd::data::{make_blobs, BlobSpec, Dataset};
use ncd::metrics::{ari, clustering_accuracy, nmi, Partition};
use ncd::pbn::{cluster_latent, project, train, LatentBackend, PBNConfig, PBNModel};

fn blobs(classes: std::ops::Range<usize>, per_class: usize, seed: u64) -> Dataset {
    let specs: Vec<BlobSpec> = classes
        .map(|c| {
            let center: Vec<f64> = (0..8).map(|f| ((c * 5 + f) % 7) as f64 * 2.5).collect();
            BlobSpec::new(center, per_class, 0.6)
        })
        .collect();
    make_blobs(&specs, seed).expect("blob specs are valid")
}

fn main() {
    let known = blobs(0..3, 120, 11);
    let novel = blobs(3..6, 90, 12);
    let truth = Partition::from_labels(novel.y.as_ref().expect("synthetic data is labeled"));

    let km = ncd_kmeans(&known, &novel, 3, 10, 7).expect("k-means discovery succeeds");
    println!(
        "k-means    acc {:.3}  ari {:.3}  nmi {:.3}  (inertia {:.2}, {} iters)",
        clustering_accuracy(&truth, &km.assignment).expect("same length"),
        ari(&truth, &km.assignment).expect("same length"),
        nmi(&truth, &km.assignment).expect("same length"),
        km.inertia,
        km.n_iter,
    );

    let sc = ncd_sc_optimize(&known, &novel, 3, 8, 7).expect("spectral discovery succeeds");
    println!(
        "spectral   acc {:.3}  ari {:.3}  nmi {:.3}  (s_min {:.3}, u {}, labeled ari {:.3})",
        clustering_accuracy(&truth, &sc.assignment).expect("same length"),
        ari(&truth, &sc.assignment).expect("same length"),
        nmi(&truth, &sc.assignment).expect("same length"),
        sc.params.s_min,
        sc.params.u,
        sc.labeled_ari,
    );

    let cfg = PBNConfig::new(5, 0.01, 0.1, 0.5, 7);
    let (model, report) = train(&known, &novel, &cfg).expect("projection training succeeds");
    let z = project(&model, novel.x.view()).expect("widths match");
    let pbn = cluster_latent(z.view(), 3, LatentBackend::KMeans, 7).expect("latent is clusterable");
    println!(
        "projection acc {:.3}  ari {:.3}  nmi {:.3}  (final loss {:.4}, {:.1}s)",
        clustering_accuracy(&truth, &pbn).expect("same length"),
        ari(&truth, &pbn).expect("same length"),
        nmi(&truth, &pbn).expect("same length"),
        report.final_loss,
        report.wall_secs,
    );

    let reloaded = PBNModel::from_text(&model.to_text()).expect("own serialization parses");
    assert_eq!(reloaded, model, "serialization round trip changed the model");

    for (name, pred) in [
        ("k-means", &km.assignment),
        ("spectral", &sc.assignment),
        ("projection", &pbn),
    ] {
        let a = clustering_accuracy(&truth, pred).expect("same length");
        assert!(a > 0.95, "{name} accuracy {a:.3} below 0.95 on separable blobs");
    }
    println!("ok: all methods recover the planted novel classes");
}
