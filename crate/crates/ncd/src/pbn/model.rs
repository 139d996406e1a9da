//! The projection model: a bottleneck encoder shared by a known-class
//! classifier head and a mirrored decoder.

use ndarray::{Array1, Array2, ArrayView2, Axis, Zip};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{NcdError, Result};

/// Hyperparameters of the projection model.
///
/// The four tuned fields (`latent_dim`, `lr`, `dropout`, `w`) carry their
/// documented search ranges, enforced by [`PBNConfig::validate`]. Epochs and
/// batch size are fixed protocol constants, defaulting to 200 and 512.
#[derive(Debug, Clone, PartialEq)]
pub struct PBNConfig {
    /// Width of the latent layer, in `[5, d]`.
    pub latent_dim: usize,
    /// Adam step size, in `[1e-4, 0.1]`.
    pub lr: f64,
    /// Probability of zeroing a hidden activation during training, in
    /// `[0, 0.6]`.
    pub dropout: f64,
    /// Trade-off between the classification and reconstruction terms, in
    /// `[0, 1]`: the training loss is `w * ce + (1 - w) * mse`.
    pub w: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
}

impl PBNConfig {
    /// A config with the protocol defaults: 200 epochs, batches of 512.
    pub fn new(latent_dim: usize, lr: f64, dropout: f64, w: f64, seed: u64) -> Self {
        PBNConfig {
            latent_dim,
            lr,
            dropout,
            w,
            epochs: 200,
            batch_size: 512,
            seed,
        }
    }

    /// Checks every field against its documented range for data width `d`.
    pub fn validate(&self, d: usize) -> Result<()> {
        if self.latent_dim < 5 || self.latent_dim > d {
            return Err(NcdError::invalid(format!(
                "latent_dim {} outside [5, {d}]",
                self.latent_dim
            )));
        }
        if !self.lr.is_finite() || !(1e-4..=0.1).contains(&self.lr) {
            return Err(NcdError::invalid(format!(
                "learning rate {} outside [1e-4, 0.1]",
                self.lr
            )));
        }
        if !self.dropout.is_finite() || !(0.0..=0.6).contains(&self.dropout) {
            return Err(NcdError::invalid(format!(
                "dropout {} outside [0, 0.6]",
                self.dropout
            )));
        }
        if !self.w.is_finite() || !(0.0..=1.0).contains(&self.w) {
            return Err(NcdError::invalid(format!("loss weight {} outside [0, 1]", self.w)));
        }
        if self.epochs == 0 {
            return Err(NcdError::invalid("epochs must be positive"));
        }
        if self.batch_size == 0 {
            return Err(NcdError::invalid("batch size must be positive"));
        }
        Ok(())
    }
}

/// One affine layer. Weights are `(fan_in, fan_out)` so a batch of rows maps
/// through `x.dot(&w) + b`.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Dense {
    pub(crate) w: Array2<f64>,
    pub(crate) b: Array1<f64>,
}

impl Dense {
    /// Fan-in-scaled uniform init: `U(-1/sqrt(fan_in), 1/sqrt(fan_in))` for
    /// weights and biases alike, drawn weights first.
    fn init(fan_in: usize, fan_out: usize, rng: &mut ChaCha8Rng) -> Dense {
        let s = 1.0 / (fan_in as f64).sqrt();
        let mut w = Array2::zeros((fan_in, fan_out));
        for v in w.iter_mut() {
            *v = rng.random_range(-s..s);
        }
        let mut b = Array1::zeros(fan_out);
        for v in b.iter_mut() {
            *v = rng.random_range(-s..s);
        }
        Dense { w, b }
    }

    pub(crate) fn affine(&self, x: ArrayView2<f64>) -> Array2<f64> {
        let mut out = x.dot(&self.w);
        out += &self.b;
        out
    }
}

/// Gradient of a scalar loss with respect to one [`Dense`] layer.
pub(crate) struct DenseGrad {
    pub(crate) w: Array2<f64>,
    pub(crate) b: Array1<f64>,
}

/// A stack of affine layers: rectified-linear hidden activations, linear last
/// layer, dropout after each hidden activation in training mode.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Mlp {
    pub(crate) layers: Vec<Dense>,
}

/// Values saved by a training-mode forward pass for backpropagation.
pub(crate) struct MlpCache {
    /// Input to each layer, after the previous layer's dropout.
    inputs: Vec<Array2<f64>>,
    /// Post-activation, pre-dropout values of each hidden layer.
    hidden: Vec<Array2<f64>>,
    /// Dropout masks with the inverted `1/(1-p)` scale folded in; `None`
    /// when `p == 0`.
    masks: Vec<Option<Array2<f64>>>,
}

impl Mlp {
    fn init(dims: &[usize], rng: &mut ChaCha8Rng) -> Mlp {
        let layers = dims.windows(2).map(|d| Dense::init(d[0], d[1], rng)).collect();
        Mlp { layers }
    }

    /// Inference-mode forward pass: no dropout, nothing cached.
    pub(crate) fn forward(&self, x: ArrayView2<f64>) -> Array2<f64> {
        let last = self.layers.len() - 1;
        let mut a = self.layers[0].affine(x);
        for (i, layer) in self.layers.iter().enumerate() {
            if i > 0 {
                a = layer.affine(a.view());
            }
            if i < last {
                a.mapv_inplace(|v| v.max(0.0));
            }
        }
        a
    }

    /// Training-mode forward pass. Draws one dropout mask per hidden layer in
    /// stack order; with `p == 0` nothing is drawn and the output equals
    /// [`Mlp::forward`] exactly.
    pub(crate) fn forward_train(
        &self,
        x: ArrayView2<f64>,
        p: f64,
        rng: &mut ChaCha8Rng,
    ) -> (Array2<f64>, MlpCache) {
        let last = self.layers.len() - 1;
        let mut inputs = Vec::with_capacity(self.layers.len());
        let mut hidden = Vec::with_capacity(last);
        let mut masks = Vec::with_capacity(last);
        let mut a = x.to_owned();
        for (i, layer) in self.layers.iter().enumerate() {
            inputs.push(a.clone());
            a = layer.affine(a.view());
            if i < last {
                a.mapv_inplace(|v| v.max(0.0));
                hidden.push(a.clone());
                if p > 0.0 {
                    let scale = 1.0 / (1.0 - p);
                    let mut m = Array2::zeros(a.raw_dim());
                    for v in m.iter_mut() {
                        if rng.random::<f64>() >= p {
                            *v = scale;
                        }
                    }
                    a *= &m;
                    masks.push(Some(m));
                } else {
                    masks.push(None);
                }
            }
        }
        (a, MlpCache { inputs, hidden, masks })
    }

    /// Backpropagates `d_out`, the loss gradient at the stack's output,
    /// through a cached forward pass. Returns per-layer parameter gradients
    /// and the gradient at the stack's input.
    pub(crate) fn backward(
        &self,
        cache: &MlpCache,
        d_out: Array2<f64>,
    ) -> (Vec<DenseGrad>, Array2<f64>) {
        let last = self.layers.len() - 1;
        let mut grads: Vec<Option<DenseGrad>> = self.layers.iter().map(|_| None).collect();
        let mut d = d_out;
        for i in (0..self.layers.len()).rev() {
            if i < last {
                // Undo dropout, then gate on the rectifier.
                if let Some(m) = &cache.masks[i] {
                    d *= m;
                }
                Zip::from(&mut d).and(&cache.hidden[i]).for_each(|dv, &hv| {
                    if hv <= 0.0 {
                        *dv = 0.0;
                    }
                });
            }
            let dw = cache.inputs[i].t().dot(&d);
            let db = d.sum_axis(Axis(0));
            let dx = d.dot(&self.layers[i].w.t());
            grads[i] = Some(DenseGrad { w: dw, b: db });
            d = dx;
        }
        let grads = grads.into_iter().map(|g| g.expect("visited")).collect();
        (grads, d)
    }
}

/// Row-wise softmax, stabilized by subtracting each row's maximum.
pub(crate) fn softmax(logits: ArrayView2<f64>) -> Array2<f64> {
    let mut out = logits.to_owned();
    for mut row in out.rows_mut() {
        let mx = row.fold(f64::NEG_INFINITY, |a, &b| a.max(b));
        row.mapv_inplace(|v| (v - mx).exp());
        let sum = row.sum();
        row.mapv_inplace(|v| v / sum);
    }
    out
}

/// The projection model: encoder `d -> h1 -> h2 -> latent`, decoder
/// mirroring it back to `d`, and a single affine classifier head over the
/// known classes.
#[derive(Debug, Clone, PartialEq)]
pub struct PBNModel {
    pub(crate) enc: Mlp,
    pub(crate) dec: Mlp,
    pub(crate) cls: Dense,
    pub config: PBNConfig,
    pub d: usize,
    pub c_l: usize,
    pub h1: usize,
    pub h2: usize,
}

/// Hidden widths interpolating geometrically between `d` and the latent
/// width: `h1 = floor(d^(2/3) l^(1/3))`, `h2 = floor(d^(1/3) l^(2/3))`, both
/// clamped to at least `l`.
pub(crate) fn hidden_sizes(d: usize, latent: usize) -> (usize, usize) {
    let df = d as f64;
    let lf = latent as f64;
    let h1 = (df.powf(2.0 / 3.0) * lf.powf(1.0 / 3.0)).floor() as usize;
    let h2 = (df.powf(1.0 / 3.0) * lf.powf(2.0 / 3.0)).floor() as usize;
    (h1.max(latent), h2.max(latent))
}

/// Builds an untrained model for `d`-dimensional data with `c_l` known
/// classes.
///
/// Deterministic in `seed`: tensors are drawn encoder, decoder, classifier,
/// each layer's weights before its bias.
pub fn init_model(d: usize, c_l: usize, config: &PBNConfig, seed: u64) -> Result<PBNModel> {
    config.validate(d)?;
    if c_l < 2 {
        return Err(NcdError::invalid(format!(
            "need at least 2 known classes, got {c_l}"
        )));
    }
    let l = config.latent_dim;
    let (h1, h2) = hidden_sizes(d, l);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let enc = Mlp::init(&[d, h1, h2, l], &mut rng);
    let dec = Mlp::init(&[l, h2, h1, d], &mut rng);
    let cls = Dense::init(l, c_l, &mut rng);
    Ok(PBNModel {
        enc,
        dec,
        cls,
        config: config.clone(),
        d,
        c_l,
        h1,
        h2,
    })
}

/// Projects rows into the latent space with the trained encoder.
/// Inference mode: deterministic, dropout off.
pub fn project(model: &PBNModel, x: ArrayView2<f64>) -> Result<Array2<f64>> {
    if x.ncols() != model.d {
        return Err(NcdError::invalid(format!(
            "{} columns for a model trained on {}",
            x.ncols(),
            model.d
        )));
    }
    Ok(model.enc.forward(x))
}

impl PBNModel {
    /// Known-class probabilities per row; each row sums to 1.
    pub fn classify(&self, x: ArrayView2<f64>) -> Result<Array2<f64>> {
        let z = project(self, x)?;
        Ok(softmax(self.cls.affine(z.view()).view()))
    }

    /// Reconstructions of each row through encoder and decoder.
    pub fn reconstruct(&self, x: ArrayView2<f64>) -> Result<Array2<f64>> {
        let z = project(self, x)?;
        Ok(self.dec.forward(z.view()))
    }

    pub fn latent_dim(&self) -> usize {
        self.config.latent_dim
    }
}
