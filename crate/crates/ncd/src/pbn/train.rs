//! Joint training of the projection model: known-class cross-entropy plus
//! all-data reconstruction, backpropagated through the shared encoder.

use ndarray::{Array2, ArrayView1, ArrayView2, Axis, Dimension, Zip};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::time::Instant;

use super::model::{init_model, softmax, Dense, DenseGrad, PBNConfig, PBNModel};
use crate::data::Dataset;
use crate::error::{NcdError, Result};
use crate::seeding::derive_seed;

/// Probabilities below this are clamped before taking logarithms, so a
/// saturated classifier yields a large finite loss instead of infinity.
pub(crate) const LOG_FLOOR: f64 = 1e-12;

/// Cross-entropy of one probability row against a one-hot target.
pub fn loss_ce(probs: ArrayView1<f64>, y_onehot: ArrayView1<f64>) -> Result<f64> {
    if probs.len() != y_onehot.len() || probs.is_empty() {
        return Err(NcdError::invalid(format!(
            "{} probabilities against {} targets",
            probs.len(),
            y_onehot.len()
        )));
    }
    Ok(-probs
        .iter()
        .zip(y_onehot.iter())
        .map(|(&p, &y)| y * p.max(LOG_FLOOR).ln())
        .sum::<f64>())
}

/// Mean squared error per feature between a row and its reconstruction.
pub fn loss_mse(x: ArrayView1<f64>, xhat: ArrayView1<f64>) -> Result<f64> {
    if x.len() != xhat.len() || x.is_empty() {
        return Err(NcdError::invalid(format!(
            "{} features against {} reconstructed",
            x.len(),
            xhat.len()
        )));
    }
    let sse: f64 = x.iter().zip(xhat.iter()).map(|(&a, &b)| (a - b) * (a - b)).sum();
    Ok(sse / x.len() as f64)
}

/// The joint loss of a batch under the current model, in inference mode:
/// `w` times the mean cross-entropy over the labeled rows plus `1 - w` times
/// the mean reconstruction error over all rows. A batch with no labeled rows
/// has no cross-entropy term.
pub fn loss_pbn(model: &PBNModel, x: ArrayView2<f64>, y: &[Option<usize>], w: f64) -> Result<f64> {
    if y.len() != x.nrows() || x.nrows() == 0 {
        return Err(NcdError::invalid(format!(
            "{} labels for a batch of {} rows",
            y.len(),
            x.nrows()
        )));
    }
    if !w.is_finite() || !(0.0..=1.0).contains(&w) {
        return Err(NcdError::invalid(format!("loss weight {w} outside [0, 1]")));
    }
    let probs = model.classify(x)?;
    let xhat = model.reconstruct(x)?;
    let mut ce_sum = 0.0;
    let mut n_lab = 0usize;
    for (i, lab) in y.iter().enumerate() {
        if let Some(c) = lab {
            if *c >= model.c_l {
                return Err(NcdError::invalid(format!(
                    "label {c} out of range for {} known classes",
                    model.c_l
                )));
            }
            ce_sum -= probs[[i, *c]].max(LOG_FLOOR).ln();
            n_lab += 1;
        }
    }
    let mut mse_sum = 0.0;
    for i in 0..x.nrows() {
        mse_sum += loss_mse(x.row(i), xhat.row(i))?;
    }
    let ce = if n_lab > 0 { ce_sum / n_lab as f64 } else { 0.0 };
    Ok(w * ce + (1.0 - w) * (mse_sum / x.nrows() as f64))
}

/// Adam first/second moment buffers for one tensor.
struct Adam<D: Dimension> {
    m: ndarray::Array<f64, D>,
    v: ndarray::Array<f64, D>,
}

impl<D: Dimension> Adam<D> {
    fn new(dim: D) -> Self {
        Adam {
            m: ndarray::Array::zeros(dim.clone()),
            v: ndarray::Array::zeros(dim),
        }
    }

    /// One bias-corrected update; `t` counts steps from 1.
    fn step(&mut self, p: &mut ndarray::Array<f64, D>, g: &ndarray::Array<f64, D>, lr: f64, t: i32) {
        const B1: f64 = 0.9;
        const B2: f64 = 0.999;
        const EPS: f64 = 1e-8;
        let c1 = 1.0 - B1.powi(t);
        let c2 = 1.0 - B2.powi(t);
        Zip::from(p)
            .and(&mut self.m)
            .and(&mut self.v)
            .and(g)
            .for_each(|p, m, v, &g| {
                *m = B1 * *m + (1.0 - B1) * g;
                *v = B2 * *v + (1.0 - B2) * g * g;
                *p -= lr * (*m / c1) / ((*v / c2).sqrt() + EPS);
            });
    }
}

/// Optimizer state for one affine layer.
pub(crate) struct DenseOpt {
    w: Adam<ndarray::Ix2>,
    b: Adam<ndarray::Ix1>,
}

impl DenseOpt {
    pub(crate) fn for_layer(layer: &Dense) -> DenseOpt {
        DenseOpt {
            w: Adam::new(layer.w.raw_dim()),
            b: Adam::new(layer.b.raw_dim()),
        }
    }

    pub(crate) fn step(&mut self, layer: &mut Dense, g: &DenseGrad, lr: f64, t: i32) {
        self.w.step(&mut layer.w, &g.w, lr, t);
        self.b.step(&mut layer.b, &g.b, lr, t);
    }
}

/// Gradients of the joint loss for every tensor in the model.
pub(crate) struct PBNGrads {
    enc: Vec<DenseGrad>,
    dec: Vec<DenseGrad>,
    cls: DenseGrad,
}

#[cfg(test)]
impl PBNGrads {
    /// Flat view of one tensor's gradient, addressed like
    /// [`tensor_values_mut`].
    fn tensor(&self, layer: usize, bias: bool) -> Vec<f64> {
        let g = match layer {
            0..=2 => &self.enc[layer],
            3..=5 => &self.dec[layer - 3],
            _ => &self.cls,
        };
        if bias {
            g.b.to_vec()
        } else {
            g.w.iter().copied().collect()
        }
    }
}

/// One training-mode forward/backward pass.
///
/// Returns the batch's summed cross-entropy over labeled rows, summed
/// per-row reconstruction error over all rows, the labeled-row count, and
/// the parameter gradients of the joint loss (`w * mean ce + (1 - w) *
/// mean mse`). The cross-entropy gradient uses the exact softmax form; the
/// logarithm clamp only guards the reported value.
fn batch_step(
    model: &PBNModel,
    xb: ArrayView2<f64>,
    yb: &[Option<usize>],
    rng: &mut ChaCha8Rng,
) -> (f64, f64, usize, PBNGrads) {
    let p = model.config.dropout;
    let w = model.config.w;
    let rows = xb.nrows();
    let (z, enc_cache) = model.enc.forward_train(xb, p, rng);
    let (xhat, dec_cache) = model.dec.forward_train(z.view(), p, rng);
    let probs = softmax(model.cls.affine(z.view()).view());

    let mut ce_sum = 0.0;
    let mut n_lab = 0usize;
    for (i, lab) in yb.iter().enumerate() {
        if let Some(c) = lab {
            ce_sum -= probs[[i, *c]].max(LOG_FLOOR).ln();
            n_lab += 1;
        }
    }
    let mut mse_sum = 0.0;
    for i in 0..rows {
        let mut sse = 0.0;
        for j in 0..xb.ncols() {
            let r = xb[[i, j]] - xhat[[i, j]];
            sse += r * r;
        }
        mse_sum += sse / xb.ncols() as f64;
    }

    // Classifier path: d(ce)/d(logit) = probs - onehot, masked to labeled
    // rows and scaled into the joint loss.
    let mut d_logits = Array2::<f64>::zeros(probs.raw_dim());
    if n_lab > 0 && w > 0.0 {
        let scale = w / n_lab as f64;
        for (i, lab) in yb.iter().enumerate() {
            if let Some(c) = lab {
                for j in 0..model.c_l {
                    let y = if j == *c { 1.0 } else { 0.0 };
                    d_logits[[i, j]] = scale * (probs[[i, j]] - y);
                }
            }
        }
    }
    let cls_grad = DenseGrad {
        w: z.t().dot(&d_logits),
        b: d_logits.sum_axis(Axis(0)),
    };
    let d_z_cls = d_logits.dot(&model.cls.w.t());

    // Reconstruction path.
    let mscale = 2.0 * (1.0 - w) / (rows as f64 * xb.ncols() as f64);
    let d_xhat = (&xhat - &xb) * mscale;
    let (dec_grads, d_z_dec) = model.dec.backward(&dec_cache, d_xhat);

    let (enc_grads, _) = model.enc.backward(&enc_cache, d_z_dec + d_z_cls);
    (
        ce_sum,
        mse_sum,
        n_lab,
        PBNGrads {
            enc: enc_grads,
            dec: dec_grads,
            cls: cls_grad,
        },
    )
}

/// Per-epoch loss traces of a training run. Every recorded value is finite;
/// training aborts on the first non-finite batch loss.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainReport {
    /// Joint loss per epoch: `w * ce + (1 - w) * mse` of the epoch means.
    pub epoch_pbn: Vec<f64>,
    /// Mean cross-entropy over the epoch's labeled rows (0 if none).
    pub epoch_ce: Vec<f64>,
    /// Mean per-feature reconstruction error over all rows.
    pub epoch_mse: Vec<f64>,
    /// Joint loss of the last epoch.
    pub final_loss: f64,
    pub wall_secs: f64,
}

/// Trains the projection model on the labeled known-class rows plus the
/// unlabeled rows.
///
/// Each epoch shuffles both sets into one joint stream and walks it in
/// batches: the classification term sees only the labeled members of each
/// batch, the reconstruction term sees every member, and both gradients
/// merge in the shared encoder. Parameters update per batch by Adam at the
/// configured rate. Deterministic in `config.seed`; the returned model is in
/// inference mode.
///
/// # Errors
/// A non-finite batch loss aborts with the epoch and batch in the message.
pub fn train(
    labeled: &Dataset,
    unlabeled: &Dataset,
    config: &PBNConfig,
) -> Result<(PBNModel, TrainReport)> {
    let started = Instant::now();
    let d = labeled.d();
    if unlabeled.d() != d {
        return Err(NcdError::invalid(format!(
            "labeled data has {d} features, unlabeled {}",
            unlabeled.d()
        )));
    }
    let y_l = labeled.labels()?;
    let c_l = labeled.class_names.len();
    if labeled.n() == 0 {
        return Err(NcdError::invalid("no labeled rows to train on"));
    }
    let mut model = init_model(d, c_l, config, derive_seed(config.seed, 0))?;
    let mut opt: Vec<DenseOpt> = model
        .enc
        .layers
        .iter()
        .chain(model.dec.layers.iter())
        .chain(std::iter::once(&model.cls))
        .map(DenseOpt::for_layer)
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(config.seed, 1));

    let n_l = labeled.n();
    let n = n_l + unlabeled.n();
    let mut order: Vec<usize> = (0..n).collect();
    let mut report = TrainReport {
        epoch_pbn: Vec::with_capacity(config.epochs),
        epoch_ce: Vec::with_capacity(config.epochs),
        epoch_mse: Vec::with_capacity(config.epochs),
        final_loss: f64::NAN,
        wall_secs: 0.0,
    };
    let mut t = 0i32;
    for epoch in 0..config.epochs {
        order.shuffle(&mut rng);
        let mut ce_sum = 0.0;
        let mut lab_rows = 0usize;
        let mut mse_sum = 0.0;
        for (bi, chunk) in order.chunks(config.batch_size).enumerate() {
            let mut xb = Array2::<f64>::zeros((chunk.len(), d));
            let mut yb = Vec::with_capacity(chunk.len());
            for (r, &idx) in chunk.iter().enumerate() {
                if idx < n_l {
                    xb.row_mut(r).assign(&labeled.x.row(idx));
                    yb.push(Some(y_l[idx]));
                } else {
                    xb.row_mut(r).assign(&unlabeled.x.row(idx - n_l));
                    yb.push(None);
                }
            }
            let (bce, bmse, bnl, grads) = batch_step(&model, xb.view(), &yb, &mut rng);
            let ce = if bnl > 0 { bce / bnl as f64 } else { 0.0 };
            let batch_loss = config.w * ce + (1.0 - config.w) * (bmse / chunk.len() as f64);
            if !batch_loss.is_finite() {
                return Err(NcdError::TrainingDiverged(format!(
                    "loss {batch_loss} at epoch {epoch}, batch {bi}"
                )));
            }
            ce_sum += bce;
            lab_rows += bnl;
            mse_sum += bmse;
            t += 1;
            let layers = model
                .enc
                .layers
                .iter_mut()
                .chain(model.dec.layers.iter_mut())
                .chain(std::iter::once(&mut model.cls));
            let grad_list = grads.enc.iter().chain(grads.dec.iter()).chain(std::iter::once(&grads.cls));
            for ((layer, state), g) in layers.zip(opt.iter_mut()).zip(grad_list) {
                state.step(layer, g, config.lr, t);
            }
        }
        let ce = if lab_rows > 0 { ce_sum / lab_rows as f64 } else { 0.0 };
        let mse = mse_sum / n as f64;
        report.epoch_ce.push(ce);
        report.epoch_mse.push(mse);
        report.epoch_pbn.push(config.w * ce + (1.0 - config.w) * mse);
    }
    report.final_loss = *report.epoch_pbn.last().expect("at least one epoch");
    report.wall_secs = started.elapsed().as_secs_f64();
    Ok((model, report))
}

#[cfg(test)]
pub(crate) fn empty_unlabeled(d: usize) -> Dataset {
    let names = (0..d).map(|i| format!("f{i}")).collect();
    Dataset::new(Array2::zeros((0, d)), None, names, vec![]).unwrap()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{make_blobs, BlobSpec};
    use approx::assert_relative_eq;
    use ndarray::{array, Array1};

    fn blob_pair(centers: [f64; 2], per: usize, d: usize, seed: u64) -> Dataset {
        blob_pair_std(centers, per, d, seed, 0.4)
    }

    fn blob_pair_std(centers: [f64; 2], per: usize, d: usize, seed: u64, std: f64) -> Dataset {
        let specs: Vec<BlobSpec> = centers
            .iter()
            .map(|&c| BlobSpec::new(vec![c; d], per, std))
            .collect();
        make_blobs(&specs, seed).unwrap()
    }

    #[test]
    fn uniform_probabilities_cost_log_k() {
        let probs = Array1::from_elem(5, 0.2);
        let y = array![0.0, 0.0, 1.0, 0.0, 0.0];
        assert_relative_eq!(
            loss_ce(probs.view(), y.view()).unwrap(),
            5.0f64.ln(),
            epsilon = 1e-12
        );
    }

    #[test]
    fn correct_onehot_prediction_costs_nothing() {
        let probs = array![0.0, 1.0, 0.0];
        let y = array![0.0, 1.0, 0.0];
        assert_relative_eq!(loss_ce(probs.view(), y.view()).unwrap(), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn known_cross_entropy_value() {
        let probs = array![0.7, 0.3];
        let y = array![1.0, 0.0];
        assert_relative_eq!(
            loss_ce(probs.view(), y.view()).unwrap(),
            0.35667494393873245,
            epsilon = 1e-15
        );
    }

    #[test]
    fn zero_probability_is_clamped_not_infinite() {
        let probs = array![0.0, 1.0];
        let y = array![1.0, 0.0];
        let l = loss_ce(probs.view(), y.view()).unwrap();
        assert!(l.is_finite());
        assert_relative_eq!(l, -LOG_FLOOR.ln(), epsilon = 1e-9);
    }

    #[test]
    fn reconstruction_error_is_mean_squared() {
        let x = array![0.0, 0.0];
        let xhat = array![1.0, 1.0];
        assert_relative_eq!(loss_mse(x.view(), xhat.view()).unwrap(), 1.0, epsilon = 1e-15);
        assert_relative_eq!(
            loss_mse(x.view(), x.view()).unwrap(),
            0.0,
            epsilon = 1e-15
        );
        let a = array![0.3, -1.2, 2.0, 0.7];
        let b = array![0.1, -0.2, 1.0, 0.7];
        let expect = (0.2f64 * 0.2 + 1.0 + 1.0 + 0.0) / 4.0;
        assert_relative_eq!(loss_mse(a.view(), b.view()).unwrap(), expect, epsilon = 1e-12);
    }

    #[test]
    fn joint_loss_is_the_affine_combination_of_its_terms() {
        let cfg = PBNConfig::new(5, 0.01, 0.0, 0.5, 3);
        let model = init_model(6, 2, &cfg, 17).unwrap();
        let x = Array2::from_shape_fn((8, 6), |(i, j)| ((i * 3 + j) % 5) as f64 * 0.4 - 1.0);
        let y: Vec<Option<usize>> = (0..8).map(|i| if i < 5 { Some(i % 2) } else { None }).collect();
        let ce_only = loss_pbn(&model, x.view(), &y, 1.0).unwrap();
        let mse_only = loss_pbn(&model, x.view(), &y, 0.0).unwrap();
        let half = loss_pbn(&model, x.view(), &y, 0.5).unwrap();
        assert_relative_eq!(half, 0.5 * ce_only + 0.5 * mse_only, epsilon = 1e-12);
        // Convex combination stays between its endpoints.
        let third = loss_pbn(&model, x.view(), &y, 0.3).unwrap();
        assert!(third >= ce_only.min(mse_only) - 1e-12);
        assert!(third <= ce_only.max(mse_only) + 1e-12);
        // Unlabeled-only batches drop the classification term.
        let none: Vec<Option<usize>> = vec![None; 8];
        assert_relative_eq!(
            loss_pbn(&model, x.view(), &none, 0.5).unwrap(),
            0.5 * mse_only,
            epsilon = 1e-12
        );
    }

    #[test]
    fn analytic_gradients_match_central_differences() {
        let cfg = PBNConfig::new(5, 0.01, 0.0, 0.6, 3);
        let mut model = init_model(6, 3, &cfg, 9).unwrap();
        let mut data_rng = ChaCha8Rng::seed_from_u64(21);
        let x = Array2::from_shape_fn((10, 6), |_| {
            rand::Rng::random_range(&mut data_rng, -1.0..1.0)
        });
        let y: Vec<Option<usize>> = (0..10)
            .map(|i| if i < 6 { Some(i % 3) } else { None })
            .collect();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let (_, _, _, grads) = batch_step(&model, x.view(), &y, &mut rng);

        let delta = 1e-5;
        for layer in 0..7 {
            for bias in [false, true] {
                let analytic = grads.tensor(layer, bias);
                for e in 0..analytic.len() {
                    let orig = tensor_values_mut(&mut model, layer, bias)[e];
                    tensor_values_mut(&mut model, layer, bias)[e] = orig + delta;
                    let up = loss_pbn(&model, x.view(), &y, 0.6).unwrap();
                    tensor_values_mut(&mut model, layer, bias)[e] = orig - delta;
                    let down = loss_pbn(&model, x.view(), &y, 0.6).unwrap();
                    tensor_values_mut(&mut model, layer, bias)[e] = orig;
                    let numeric = (up - down) / (2.0 * delta);
                    let denom = analytic[e].abs().max(numeric.abs()).max(1e-3);
                    assert!(
                        (analytic[e] - numeric).abs() / denom < 1e-4,
                        "layer {layer} bias {bias} elem {e}: analytic {} numeric {numeric}",
                        analytic[e]
                    );
                }
            }
        }
    }

    /// Flat mutable view of one tensor, `layer` 0..=2 encoder, 3..=5 decoder,
    /// 6 classifier.
    fn tensor_values_mut(model: &mut PBNModel, layer: usize, bias: bool) -> &mut [f64] {
        let dense = match layer {
            0..=2 => &mut model.enc.layers[layer],
            3..=5 => &mut model.dec.layers[layer - 3],
            _ => &mut model.cls,
        };
        if bias {
            dense.b.as_slice_mut().unwrap()
        } else {
            dense.w.as_slice_mut().unwrap()
        }
    }

    #[test]
    fn separable_classes_train_to_near_zero_cross_entropy() {
        let labeled = blob_pair([-3.0, 3.0], 60, 6, 5);
        let cfg = PBNConfig {
            latent_dim: 5,
            lr: 0.01,
            dropout: 0.0,
            w: 1.0,
            epochs: 200,
            batch_size: 512,
            seed: 11,
        };
        let (_, report) = train(&labeled, &empty_unlabeled(6), &cfg).unwrap();
        assert!(
            *report.epoch_ce.last().unwrap() < 0.05,
            "final ce {}",
            report.epoch_ce.last().unwrap()
        );
    }

    #[test]
    fn full_width_autoencoder_reconstructs_small_data() {
        // Positive-centered, tight blobs: the rectifiers stay active and the
        // structure fits through the full-width bottleneck. (Wide blob noise
        // would not: units that die per region cost rank, leaving an error
        // floor near the within-blob variance.)
        let labeled = blob_pair_std([2.0, 5.0], 40, 6, 6, 0.05);
        let unlabeled = blob_pair_std([3.5, 6.5], 30, 6, 7, 0.05);
        let cfg = PBNConfig {
            latent_dim: 6,
            lr: 0.01,
            dropout: 0.0,
            w: 0.0,
            epochs: 400,
            batch_size: 512,
            seed: 13,
        };
        let (_, report) = train(&labeled, &unlabeled, &cfg).unwrap();
        assert!(
            *report.epoch_mse.last().unwrap() < 0.01,
            "final mse {}",
            report.epoch_mse.last().unwrap()
        );
        // The run as a whole must have improved.
        assert!(report.final_loss < report.epoch_pbn[0]);
        assert!(report.epoch_pbn.iter().all(|l| l.is_finite()));
        assert_eq!(report.epoch_pbn.len(), 400);
    }

    #[test]
    fn training_is_deterministic_in_the_seed() {
        let labeled = blob_pair([-2.0, 2.0], 25, 7, 8);
        let unlabeled = blob_pair([0.0, 4.0], 20, 7, 9);
        let cfg = PBNConfig::new(5, 0.005, 0.3, 0.7, 42);
        let cfg = PBNConfig { epochs: 15, ..cfg };
        let (m1, r1) = train(&labeled, &unlabeled, &cfg).unwrap();
        let (m2, r2) = train(&labeled, &unlabeled, &cfg).unwrap();
        assert_eq!(m1, m2);
        assert_eq!(r1.epoch_pbn, r2.epoch_pbn);
        let other = PBNConfig { seed: 43, ..cfg };
        let (m3, _) = train(&labeled, &unlabeled, &other).unwrap();
        assert_ne!(m1, m3);
    }

    #[test]
    fn exploding_inputs_abort_with_diagnostics() {
        let x = Array2::from_elem((8, 6), 1e200);
        let labeled = Dataset::new(
            x,
            Some(vec![0, 1, 0, 1, 0, 1, 0, 1]),
            (0..6).map(|i| format!("f{i}")).collect(),
            vec!["a".into(), "b".into()],
        )
        .unwrap();
        let cfg = PBNConfig::new(5, 0.01, 0.0, 0.5, 1);
        let err = train(&labeled, &empty_unlabeled(6), &cfg).unwrap_err();
        match err {
            NcdError::TrainingDiverged(msg) => {
                assert!(msg.contains("epoch 0"), "message: {msg}");
            }
            other => panic!("expected divergence, got {other}"),
        }
    }

    #[test]
    fn trained_latent_separates_the_known_classes() {
        let labeled = blob_pair([-3.0, 3.0], 50, 8, 14);
        let cfg = PBNConfig {
            latent_dim: 5,
            lr: 0.01,
            dropout: 0.0,
            w: 0.9,
            epochs: 80,
            batch_size: 512,
            seed: 2,
        };
        let (model, _) = train(&labeled, &empty_unlabeled(8), &cfg).unwrap();
        let z = super::super::project(&model, labeled.x.view()).unwrap();
        let truth = crate::metrics::Partition::from_labels(labeled.labels().unwrap());
        let ch = crate::metrics::calinski_harabasz(z.view(), &truth).unwrap();
        assert!(ch > 1.0, "calinski-harabasz {ch}");
    }

    #[test]
    fn mismatched_dimensions_are_rejected() {
        let labeled = blob_pair([-1.0, 1.0], 10, 6, 1);
        let unlabeled = blob_pair([0.0, 2.0], 10, 7, 2);
        let cfg = PBNConfig::new(5, 0.01, 0.0, 0.5, 1);
        assert!(train(&labeled, &unlabeled, &cfg).is_err());
    }
}
