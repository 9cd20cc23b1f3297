//! Parameter tensors, the LSTM cell, and the batched forward pass with
//! full backpropagation through time.
//!
//! Gate pre-activations of a layer with `H` units are laid out as four
//! column blocks of width `H`: input, forget, output, candidate.

use ndarray::linalg::general_mat_mul;
use ndarray::{s, Array1, Array2, ArrayView1, ArrayView2, Axis};
use rand::distr::{Bernoulli, Distribution, Uniform};
use rand::Rng;

use super::{huber_grad, huber_loss, ForecastError, LstmConfig, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct LstmLayer {
    /// `input_width × 4H`
    pub w_input: Array2<f64>,
    /// `H × 4H`
    pub w_recurrent: Array2<f64>,
    /// `4H`
    pub bias: Array1<f64>,
}

impl LstmLayer {
    pub fn hidden(&self) -> usize {
        self.bias.len() / 4
    }

    pub fn input_width(&self) -> usize {
        self.w_input.nrows()
    }
}

/// Fully connected layer, `y = x · weights + bias`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dense {
    /// `in × out`
    pub weights: Array2<f64>,
    pub bias: Array1<f64>,
}

/// Every trainable tensor of the network. Also used for gradients and
/// optimizer moments, which share the shapes.
#[derive(Debug, Clone, PartialEq)]
pub struct LstmParams {
    pub layers: Vec<LstmLayer>,
    /// ReLU hidden layer fed by the last LSTM layer's final state.
    pub dense: Dense,
    /// Single logistic output unit.
    pub output: Dense,
}

fn logistic(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

impl LstmParams {
    pub fn zeros(config: &LstmConfig) -> Self {
        let mut input = 1;
        let layers = config
            .lstm_layers
            .iter()
            .map(|&h| {
                let layer = LstmLayer {
                    w_input: Array2::zeros((input, 4 * h)),
                    w_recurrent: Array2::zeros((h, 4 * h)),
                    bias: Array1::zeros(4 * h),
                };
                input = h;
                layer
            })
            .collect();
        Self {
            layers,
            dense: Dense { weights: Array2::zeros((input, config.dense_width)), bias: Array1::zeros(config.dense_width) },
            output: Dense { weights: Array2::zeros((config.dense_width, 1)), bias: Array1::zeros(1) },
        }
    }

    /// Glorot-uniform weights, zero biases except the forget gate at 1.
    pub fn init<R: Rng + ?Sized>(config: &LstmConfig, rng: &mut R) -> Self {
        let mut p = Self::zeros(config);
        let mut glorot = |a: &mut Array2<f64>| {
            let limit = (6.0 / (a.nrows() + a.ncols()) as f64).sqrt();
            let dist = Uniform::new_inclusive(-limit, limit).expect("finite limit");
            a.iter_mut().for_each(|v| *v = dist.sample(rng));
        };
        for layer in &mut p.layers {
            glorot(&mut layer.w_input);
            glorot(&mut layer.w_recurrent);
            let h = layer.hidden();
            layer.bias.slice_mut(s![h..2 * h]).fill(1.0);
        }
        glorot(&mut p.dense.weights);
        glorot(&mut p.output.weights);
        p
    }

    /// Tensor names in a fixed order shared by [`Self::shapes`],
    /// [`Self::slices`] and [`Self::slices_mut`].
    pub fn names(&self) -> Vec<String> {
        let mut names = Vec::new();
        for i in 0..self.layers.len() {
            names.push(format!("lstm.{i}.w_input"));
            names.push(format!("lstm.{i}.w_recurrent"));
            names.push(format!("lstm.{i}.bias"));
        }
        names.extend(["dense.weights", "dense.bias", "output.weights", "output.bias"].map(String::from));
        names
    }

    pub fn shapes(&self) -> Vec<Vec<usize>> {
        let mut shapes = Vec::new();
        for l in &self.layers {
            shapes.push(l.w_input.shape().to_vec());
            shapes.push(l.w_recurrent.shape().to_vec());
            shapes.push(l.bias.shape().to_vec());
        }
        for d in [&self.dense, &self.output] {
            shapes.push(d.weights.shape().to_vec());
            shapes.push(d.bias.shape().to_vec());
        }
        shapes
    }

    pub fn slices(&self) -> Vec<&[f64]> {
        let mut out: Vec<&[f64]> = Vec::new();
        for l in &self.layers {
            out.push(l.w_input.as_slice().expect("standard layout"));
            out.push(l.w_recurrent.as_slice().expect("standard layout"));
            out.push(l.bias.as_slice().expect("standard layout"));
        }
        for d in [&self.dense, &self.output] {
            out.push(d.weights.as_slice().expect("standard layout"));
            out.push(d.bias.as_slice().expect("standard layout"));
        }
        out
    }

    pub fn slices_mut(&mut self) -> Vec<&mut [f64]> {
        let mut out: Vec<&mut [f64]> = Vec::new();
        for l in &mut self.layers {
            out.push(l.w_input.as_slice_mut().expect("standard layout"));
            out.push(l.w_recurrent.as_slice_mut().expect("standard layout"));
            out.push(l.bias.as_slice_mut().expect("standard layout"));
        }
        for d in [&mut self.dense, &mut self.output] {
            out.push(d.weights.as_slice_mut().expect("standard layout"));
            out.push(d.bias.as_slice_mut().expect("standard layout"));
        }
        out
    }

    pub fn zeros_like(&self) -> Self {
        let mut z = self.clone();
        z.slices_mut().into_iter().for_each(|s| s.fill(0.0));
        z
    }

    pub fn parameter_count(&self) -> usize {
        self.slices().iter().map(|s| s.len()).sum()
    }

    pub fn all_finite(&self) -> bool {
        self.slices().iter().all(|s| s.iter().all(|v| v.is_finite()))
    }

    /// Checks that the tensor shapes follow `config`.
    pub fn check_shapes(&self, config: &LstmConfig) -> Result<()> {
        let expected = Self::zeros(config);
        if self.shapes() != expected.shapes() {
            return Err(ForecastError::Shape(format!(
                "parameter shapes {:?} do not match config {:?}",
                self.shapes(),
                expected.shapes()
            )));
        }
        Ok(())
    }
}

/// One LSTM step for a single sample.
///
/// `i, f, o = σ(·)`, `g = tanh(·)`, `c = f⊙c_prev + i⊙g`, `h = o⊙tanh(c)`.
pub fn lstm_cell_step(
    x: ArrayView1<f64>,
    h_prev: ArrayView1<f64>,
    c_prev: ArrayView1<f64>,
    layer: &LstmLayer,
) -> Result<(Array1<f64>, Array1<f64>)> {
    let h = layer.hidden();
    if x.len() != layer.input_width() || h_prev.len() != h || c_prev.len() != h {
        return Err(ForecastError::Shape(format!(
            "cell expects input {} and state {h}, got {} / {} / {}",
            layer.input_width(),
            x.len(),
            h_prev.len(),
            c_prev.len()
        )));
    }
    let z = x.dot(&layer.w_input) + h_prev.dot(&layer.w_recurrent) + &layer.bias;
    let mut h_t = Array1::zeros(h);
    let mut c_t = Array1::zeros(h);
    for j in 0..h {
        let i = logistic(z[j]);
        let f = logistic(z[h + j]);
        let o = logistic(z[2 * h + j]);
        let g = z[3 * h + j].tanh();
        c_t[j] = f * c_prev[j] + i * g;
        h_t[j] = o * c_t[j].tanh();
    }
    if h_t.iter().chain(c_t.iter()).any(|v| !v.is_finite()) {
        return Err(ForecastError::NonFinite("LSTM cell state".into()));
    }
    Ok((h_t, c_t))
}

/// Inverted-dropout multipliers: 0 or `1 / (1 - rate)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DropoutMasks {
    /// Per non-final layer, one `B × H` mask per timestep of its output sequence.
    pub sequence: Vec<Vec<Array2<f64>>>,
    /// `B × H` mask on the final layer's last hidden state.
    pub last: Array2<f64>,
}

impl DropoutMasks {
    pub fn sample<R: Rng + ?Sized>(config: &LstmConfig, batch: usize, rng: &mut R) -> Option<Self> {
        let rate = config.dropout_rate;
        if rate == 0.0 {
            return None;
        }
        let keep = Bernoulli::new(1.0 - rate).expect("rate validated");
        let scale = 1.0 / (1.0 - rate);
        let mut mask = |h: usize| Array2::from_shape_fn((batch, h), |_| if keep.sample(rng) { scale } else { 0.0 });
        let n = config.lstm_layers.len();
        let sequence = config.lstm_layers[..n - 1]
            .iter()
            .map(|&h| (0..config.window).map(|_| mask(h)).collect())
            .collect();
        let last = mask(config.lstm_layers[n - 1]);
        Some(Self { sequence, last })
    }
}

struct LayerCache {
    /// `x_t`, `T` entries of `B × in`.
    inputs: Vec<Array2<f64>>,
    /// `h_0..h_T`, each `B × H` (`h_0` zero).
    h: Vec<Array2<f64>>,
    /// `c_0..c_T`.
    c: Vec<Array2<f64>>,
    /// Activated gates per step, `B × 4H` in block order i, f, o, g.
    gates: Vec<Array2<f64>>,
    tanh_c: Vec<Array2<f64>>,
}

/// Intermediate values of a batched forward pass.
pub struct ForwardCache {
    layers: Vec<LayerCache>,
    dense_in: Array2<f64>,
    dense_pre: Array2<f64>,
    dense_out: Array2<f64>,
    /// Logistic outputs, one per sample.
    pub output: Array1<f64>,
}

impl ForwardCache {
    /// Hidden-state sequence of layer `l`, `T` entries of `B × H`.
    pub fn hidden_sequence(&self, l: usize) -> &[Array2<f64>] {
        &self.layers[l].h[1..]
    }
}

/// Runs the network on a `B × T` batch of scaled windows.
pub fn forward_batch(params: &LstmParams, inputs: ArrayView2<f64>, masks: Option<&DropoutMasks>) -> Result<ForwardCache> {
    let (batch, steps) = inputs.dim();
    if batch == 0 || steps == 0 {
        return Err(ForecastError::Shape("empty batch".into()));
    }
    let n_layers = params.layers.len();
    let mut layer_input: Vec<Array2<f64>> =
        (0..steps).map(|t| inputs.slice(s![.., t..t + 1]).to_owned()).collect();
    let mut caches = Vec::with_capacity(n_layers);

    for (l, layer) in params.layers.iter().enumerate() {
        let hid = layer.hidden();
        if layer_input[0].ncols() != layer.input_width() {
            return Err(ForecastError::Shape(format!(
                "layer {l} expects input width {}, got {}",
                layer.input_width(),
                layer_input[0].ncols()
            )));
        }
        let mut cache = LayerCache {
            inputs: Vec::with_capacity(steps),
            h: vec![Array2::zeros((batch, hid))],
            c: vec![Array2::zeros((batch, hid))],
            gates: Vec::with_capacity(steps),
            tanh_c: Vec::with_capacity(steps),
        };
        for x in layer_input.drain(..) {
            let mut z = Array2::zeros((batch, 4 * hid));
            z += &layer.bias;
            general_mat_mul(1.0, &x, &layer.w_input, 1.0, &mut z);
            general_mat_mul(1.0, cache.h.last().unwrap(), &layer.w_recurrent, 1.0, &mut z);
            let c_prev = cache.c.last().unwrap();
            let mut c = Array2::zeros((batch, hid));
            let mut tc = Array2::zeros((batch, hid));
            let mut h = Array2::zeros((batch, hid));
            for b in 0..batch {
                let zr = z.row_mut(b).into_slice().expect("standard layout");
                let (zi, rest) = zr.split_at_mut(hid);
                let (zf, rest) = rest.split_at_mut(hid);
                let (zo, zg) = rest.split_at_mut(hid);
                let cp = c_prev.row(b);
                let mut cr = c.row_mut(b);
                let mut tr = tc.row_mut(b);
                let mut hr = h.row_mut(b);
                for j in 0..hid {
                    zi[j] = logistic(zi[j]);
                    zf[j] = logistic(zf[j]);
                    zo[j] = logistic(zo[j]);
                    zg[j] = zg[j].tanh();
                    let cv = zf[j] * cp[j] + zi[j] * zg[j];
                    let t = cv.tanh();
                    cr[j] = cv;
                    tr[j] = t;
                    hr[j] = zo[j] * t;
                }
            }
            cache.inputs.push(x);
            cache.gates.push(z);
            cache.c.push(c);
            cache.tanh_c.push(tc);
            cache.h.push(h);
        }
        if l + 1 < n_layers {
            layer_input = cache.h[1..]
                .iter()
                .enumerate()
                .map(|(t, h)| match masks {
                    Some(m) => h * &m.sequence[l][t],
                    None => h.clone(),
                })
                .collect();
        }
        caches.push(cache);
    }

    let last_h = caches.last().unwrap().h.last().unwrap();
    let dense_in = match masks {
        Some(m) => last_h * &m.last,
        None => last_h.clone(),
    };
    let dense_pre = dense_in.dot(&params.dense.weights) + &params.dense.bias;
    let dense_out = dense_pre.mapv(|v| v.max(0.0));
    let logits = dense_out.dot(&params.output.weights) + &params.output.bias;
    let output: Array1<f64> = logits.column(0).mapv(logistic);
    if output.iter().any(|v| !v.is_finite()) {
        return Err(ForecastError::NonFinite("network output".into()));
    }
    Ok(ForwardCache { layers: caches, dense_in, dense_pre, dense_out, output })
}

/// Mean Huber loss of the batch and its gradient with respect to every
/// parameter, unrolled across all timesteps.
pub fn backward(
    params: &LstmParams,
    cache: &ForwardCache,
    targets: ArrayView1<f64>,
    masks: Option<&DropoutMasks>,
    delta: f64,
) -> (f64, LstmParams) {
    let batch = cache.output.len();
    let inv_b = 1.0 / batch as f64;
    let mut grads = params.zeros_like();

    let mut loss = 0.0;
    let mut d_logit = Array2::zeros((batch, 1));
    for b in 0..batch {
        let y_hat = cache.output[b];
        let r = targets[b] - y_hat;
        loss += huber_loss(targets[b], y_hat, delta);
        // dL/dŷ = -ψ(r) / B, then through the logistic.
        d_logit[(b, 0)] = -huber_grad(r, delta) * inv_b * y_hat * (1.0 - y_hat);
    }
    loss *= inv_b;

    general_mat_mul(1.0, &cache.dense_out.t(), &d_logit, 0.0, &mut grads.output.weights);
    grads.output.bias.assign(&d_logit.sum_axis(Axis(0)));
    let mut d_dense = d_logit.dot(&params.output.weights.t());
    d_dense.zip_mut_with(&cache.dense_pre, |d, &pre| {
        if pre <= 0.0 {
            *d = 0.0;
        }
    });
    general_mat_mul(1.0, &cache.dense_in.t(), &d_dense, 0.0, &mut grads.dense.weights);
    grads.dense.bias.assign(&d_dense.sum_axis(Axis(0)));
    let mut d_last = d_dense.dot(&params.dense.weights.t());
    if let Some(m) = masks {
        d_last *= &m.last;
    }

    let steps = cache.layers[0].inputs.len();
    // Gradient arriving at each hidden state of the current layer from above.
    let mut d_out: Vec<Option<Array2<f64>>> = vec![None; steps];
    d_out[steps - 1] = Some(d_last);

    for l in (0..params.layers.len()).rev() {
        let layer = &params.layers[l];
        let lc = &cache.layers[l];
        let grad = &mut grads.layers[l];
        let hid = layer.hidden();
        let mut dh_next: Array2<f64> = Array2::zeros((batch, hid));
        let mut dc_next: Array2<f64> = Array2::zeros((batch, hid));
        let mut d_below: Vec<Option<Array2<f64>>> = vec![None; steps];
        let mut dz = Array2::zeros((batch, 4 * hid));

        for t in (0..steps).rev() {
            let mut dh = dh_next;
            if let Some(d) = &d_out[t] {
                dh += d;
            }
            let gates = &lc.gates[t];
            let tanh_c = &lc.tanh_c[t];
            let c_prev = &lc.c[t];
            for b in 0..batch {
                let g = gates.row(b);
                let g = g.as_slice().expect("standard layout");
                let dzr = dz.row_mut(b).into_slice().expect("standard layout");
                let dhr = dh.row(b);
                let tcr = tanh_c.row(b);
                let cpr = c_prev.row(b);
                let mut dcr = dc_next.row_mut(b);
                for j in 0..hid {
                    let (i, f, o, gg) = (g[j], g[hid + j], g[2 * hid + j], g[3 * hid + j]);
                    let tc = tcr[j];
                    let dc = dcr[j] + dhr[j] * o * (1.0 - tc * tc);
                    dzr[j] = dc * gg * i * (1.0 - i);
                    dzr[hid + j] = dc * cpr[j] * f * (1.0 - f);
                    dzr[2 * hid + j] = dhr[j] * tc * o * (1.0 - o);
                    dzr[3 * hid + j] = dc * i * (1.0 - gg * gg);
                    dcr[j] = dc * f;
                }
            }
            general_mat_mul(1.0, &lc.inputs[t].t(), &dz, 1.0, &mut grad.w_input);
            general_mat_mul(1.0, &lc.h[t].t(), &dz, 1.0, &mut grad.w_recurrent);
            grad.bias += &dz.sum_axis(Axis(0));
            dh_next = dz.dot(&layer.w_recurrent.t());
            if l > 0 {
                let mut dx = dz.dot(&layer.w_input.t());
                if let Some(m) = masks {
                    dx *= &m.sequence[l - 1][t];
                }
                d_below[t] = Some(dx);
            }
        }
        d_out = d_below;
    }
    (loss, grads)
}
