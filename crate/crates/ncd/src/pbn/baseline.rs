//! The classifier-only competitor: the same encoder topology trained with
//! cross-entropy on the known classes alone. Its latent layer, the last
//! hidden layer once the classification head is discarded, serves as the
//! projection for clustering.

use ndarray::{Array2, ArrayView2, Axis};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::time::Instant;

use super::model::{init_model, softmax, Dense, DenseGrad, Mlp, PBNConfig};
use super::train::{DenseOpt, TrainReport, LOG_FLOOR};
use crate::cluster::{kmeans, KMeansConfig};
use crate::data::Dataset;
use crate::error::{NcdError, Result};
use crate::metrics::Partition;
use crate::seeding::derive_seed;

/// A trained known-class classifier whose encoder doubles as a projection.
#[derive(Debug, Clone, PartialEq)]
pub struct BaselineModel {
    pub(crate) enc: Mlp,
    pub(crate) cls: Dense,
    pub config: PBNConfig,
    pub d: usize,
    pub c_l: usize,
}

/// Trains the encoder and classification head with cross-entropy on the
/// labeled rows only. No decoder, no unlabeled data; otherwise the loop
/// matches [`super::train`]: joint shuffle, batches of `batch_size`, Adam,
/// dropout on hidden activations. The report's reconstruction series is all
/// zeros and its joint-loss series equals the cross-entropy series.
///
/// # Errors
/// A non-finite batch loss aborts with the epoch and batch in the message.
pub fn baseline_train(labeled: &Dataset, config: &PBNConfig) -> Result<(BaselineModel, TrainReport)> {
    let started = Instant::now();
    let d = labeled.d();
    let y = labeled.labels()?;
    if labeled.n() == 0 {
        return Err(NcdError::invalid("no labeled rows to train on"));
    }
    // Reuse the full model's deterministic init, then drop the decoder.
    let full = init_model(d, labeled.class_names.len(), config, derive_seed(config.seed, 0))?;
    let mut enc = full.enc;
    let mut cls = full.cls;
    let c_l = full.c_l;
    let mut opt: Vec<DenseOpt> = enc
        .layers
        .iter()
        .chain(std::iter::once(&cls))
        .map(DenseOpt::for_layer)
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(config.seed, 1));

    let n = labeled.n();
    let mut order: Vec<usize> = (0..n).collect();
    let mut report = TrainReport {
        epoch_pbn: Vec::with_capacity(config.epochs),
        epoch_ce: Vec::with_capacity(config.epochs),
        epoch_mse: vec![0.0; config.epochs],
        final_loss: f64::NAN,
        wall_secs: 0.0,
    };
    let mut t = 0i32;
    for epoch in 0..config.epochs {
        order.shuffle(&mut rng);
        let mut ce_sum = 0.0;
        for (bi, chunk) in order.chunks(config.batch_size).enumerate() {
            let mut xb = Array2::<f64>::zeros((chunk.len(), d));
            for (r, &idx) in chunk.iter().enumerate() {
                xb.row_mut(r).assign(&labeled.x.row(idx));
            }
            let (z, cache) = enc.forward_train(xb.view(), config.dropout, &mut rng);
            let probs = softmax(cls.affine(z.view()).view());
            let mut bce = 0.0;
            let mut d_logits = Array2::<f64>::zeros(probs.raw_dim());
            let scale = 1.0 / chunk.len() as f64;
            for (r, &idx) in chunk.iter().enumerate() {
                let c = y[idx];
                bce -= probs[[r, c]].max(LOG_FLOOR).ln();
                for j in 0..c_l {
                    let target = if j == c { 1.0 } else { 0.0 };
                    d_logits[[r, j]] = scale * (probs[[r, j]] - target);
                }
            }
            let batch_loss = bce * scale;
            if !batch_loss.is_finite() {
                return Err(NcdError::TrainingDiverged(format!(
                    "loss {batch_loss} at epoch {epoch}, batch {bi}"
                )));
            }
            ce_sum += bce;
            let cls_grad = DenseGrad {
                w: z.t().dot(&d_logits),
                b: d_logits.sum_axis(Axis(0)),
            };
            let d_z = d_logits.dot(&cls.w.t());
            let (enc_grads, _) = enc.backward(&cache, d_z);
            t += 1;
            let layers = enc.layers.iter_mut().chain(std::iter::once(&mut cls));
            let grads = enc_grads.iter().chain(std::iter::once(&cls_grad));
            for ((layer, state), g) in layers.zip(opt.iter_mut()).zip(grads) {
                state.step(layer, g, config.lr, t);
            }
        }
        let ce = ce_sum / n as f64;
        report.epoch_ce.push(ce);
        report.epoch_pbn.push(ce);
    }
    report.final_loss = *report.epoch_pbn.last().expect("at least one epoch");
    report.wall_secs = started.elapsed().as_secs_f64();
    Ok((
        BaselineModel {
            enc,
            cls,
            config: config.clone(),
            d,
            c_l,
        },
        report,
    ))
}

/// Projects rows through the baseline's encoder. Inference mode.
pub fn baseline_project(model: &BaselineModel, x: ArrayView2<f64>) -> Result<Array2<f64>> {
    if x.ncols() != model.d {
        return Err(NcdError::invalid(format!(
            "{} columns for a model trained on {}",
            x.ncols(),
            model.d
        )));
    }
    Ok(model.enc.forward(x))
}

/// Projects unlabeled rows and partitions them with k-means (10 restarts).
pub fn baseline_cluster(
    model: &BaselineModel,
    x_u: ArrayView2<f64>,
    k: usize,
    seed: u64,
) -> Result<Partition> {
    let z = baseline_project(model, x_u)?;
    Ok(kmeans(z.view(), k, &KMeansConfig::default(), seed, None)?.assignment)
}
