use log::debug;
use ndarray::{Array1, Array2};
use rand::seq::SliceRandom;

use super::model::Streams;
use super::network::{backward, forward_batch, DropoutMasks, LstmParams};
use super::{huber_loss, make_windows, ForecastError, LstmConfig, LstmModel, Result, Scaler};

/// Trailing share of windows held out for validation (chronological split).
pub const VALIDATION_FRACTION: f64 = 0.1;

pub const TRACE_HEADER: &str = "epoch,train_loss,train_mae,val_loss,val_mae";

#[derive(Debug, Clone, PartialEq)]
pub struct EpochMetrics {
    pub epoch: usize,
    /// Sample-weighted mean over the epoch's training batches (dropout on).
    pub train_loss: f64,
    pub train_mae: f64,
    /// Inference-mode metrics on the held-out windows, if any.
    pub val_loss: Option<f64>,
    pub val_mae: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrainingTrace {
    pub epochs: Vec<EpochMetrics>,
}

impl TrainingTrace {
    pub fn to_csv(&self) -> String {
        let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        let mut out = format!("{TRACE_HEADER}\n");
        for e in &self.epochs {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                e.epoch,
                e.train_loss,
                e.train_mae,
                opt(e.val_loss),
                opt(e.val_mae)
            ));
        }
        out
    }
}

/// Adam with bias-corrected moments.
#[derive(Debug, Clone)]
pub struct Adam {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    m: LstmParams,
    v: LstmParams,
    t: i32,
}

impl Adam {
    pub fn new(params: &LstmParams, learning_rate: f64) -> Self {
        Self {
            learning_rate,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            m: params.zeros_like(),
            v: params.zeros_like(),
            t: 0,
        }
    }

    pub fn step(&mut self, params: &mut LstmParams, grads: &LstmParams) {
        self.t += 1;
        let (b1, b2) = (self.beta1, self.beta2);
        let c1 = 1.0 - b1.powi(self.t);
        let c2 = 1.0 - b2.powi(self.t);
        let lr = self.learning_rate;
        let eps = self.epsilon;
        for (((p, g), m), v) in params
            .slices_mut()
            .into_iter()
            .zip(grads.slices())
            .zip(self.m.slices_mut())
            .zip(self.v.slices_mut())
        {
            for i in 0..p.len() {
                m[i] = b1 * m[i] + (1.0 - b1) * g[i];
                v[i] = b2 * v[i] + (1.0 - b2) * g[i] * g[i];
                p[i] -= lr * (m[i] / c1) / ((v[i] / c2).sqrt() + eps);
            }
        }
    }
}

fn batch_matrix(inputs: &[Vec<f64>], idx: &[usize], window: usize) -> (Array2<f64>, Array1<f64>) {
    let x = Array2::from_shape_fn((idx.len(), window), |(b, t)| inputs[idx[b]][t]);
    (x, Array1::zeros(idx.len()))
}

/// Mean Huber loss and its gradient on scaled windows, dropout off.
pub fn loss_and_gradients(model: &LstmModel, inputs: &[Vec<f64>], targets: &[f64]) -> Result<(f64, LstmParams)> {
    if inputs.len() != targets.len() {
        return Err(ForecastError::LengthMismatch(inputs.len(), targets.len()));
    }
    if inputs.is_empty() {
        return Err(ForecastError::Empty);
    }
    let idx: Vec<usize> = (0..inputs.len()).collect();
    let (x, _) = batch_matrix(inputs, &idx, model.config.window);
    if inputs.iter().any(|w| w.len() != model.config.window) {
        return Err(ForecastError::WindowLength { expected: model.config.window, got: inputs[0].len() });
    }
    let cache = forward_batch(&model.params, x.view(), None)?;
    let y = Array1::from(targets.to_vec());
    Ok(backward(&model.params, &cache, y.view(), None, model.config.huber_delta))
}

/// Fits the scaler on the closes covered by the training windows, then
/// trains. See [`train_with_scaler`].
pub fn train(config: &LstmConfig, closes: &[f64]) -> Result<(LstmModel, TrainingTrace)> {
    config.validate()?;
    let raw = make_windows(closes, config.window, config.horizon)?;
    let n_train = split_point(raw.len());
    if n_train == 0 {
        return Err(ForecastError::TooShort { len: closes.len(), need: config.window + config.horizon });
    }
    let covered = n_train - 1 + config.window + config.horizon;
    let scaler = Scaler::fit(&closes[..covered])?;
    train_with_scaler(config, closes, scaler)
}

fn split_point(n_windows: usize) -> usize {
    n_windows - (n_windows as f64 * VALIDATION_FRACTION).floor() as usize
}

/// Trains on `closes` scaled by a given scaler.
///
/// Windows are split chronologically 90/10 into training and validation.
/// Each epoch shuffles the training windows, and every mini-batch draws
/// fresh dropout masks; all randomness comes from `config.seed`.
pub fn train_with_scaler(config: &LstmConfig, closes: &[f64], scaler: Scaler) -> Result<(LstmModel, TrainingTrace)> {
    config.validate()?;
    let scaled = scaler.transform_all(closes);
    let data = make_windows(&scaled, config.window, config.horizon)?;
    let n_train = split_point(data.len());
    if n_train == 0 {
        return Err(ForecastError::TooShort { len: closes.len(), need: config.window + config.horizon });
    }
    let (train_x, val_x) = data.inputs.split_at(n_train);
    let (train_y, val_y) = data.targets.split_at(n_train);

    let mut model = LstmModel::initialize(config.clone(), scaler)?;
    let mut adam = Adam::new(&model.params, config.learning_rate);
    let mut shuffle_rng = Streams::rng(config.seed, Streams::SHUFFLE);
    let mut dropout_rng = Streams::rng(config.seed, Streams::DROPOUT);
    let mut order: Vec<usize> = (0..n_train).collect();
    let mut trace = TrainingTrace::default();

    for epoch in 1..=config.epochs {
        order.shuffle(&mut shuffle_rng);
        let (mut loss_sum, mut abs_sum) = (0.0, 0.0);
        for (batch_no, idx) in order.chunks(config.batch_size).enumerate() {
            let (x, mut y) = batch_matrix(train_x, idx, config.window);
            for (b, &i) in idx.iter().enumerate() {
                y[b] = train_y[i];
            }
            let masks = DropoutMasks::sample(config, idx.len(), &mut dropout_rng);
            let cache = forward_batch(&model.params, x.view(), masks.as_ref())
                .map_err(|_| ForecastError::NonFiniteLoss { epoch, batch: batch_no })?;
            let (loss, grads) = backward(&model.params, &cache, y.view(), masks.as_ref(), config.huber_delta);
            if !loss.is_finite() || !grads.all_finite() {
                return Err(ForecastError::NonFiniteLoss { epoch, batch: batch_no });
            }
            loss_sum += loss * idx.len() as f64;
            abs_sum += cache.output.iter().zip(&y).map(|(p, t)| (p - t).abs()).sum::<f64>();
            adam.step(&mut model.params, &grads);
        }
        let (val_loss, val_mae) = if val_x.is_empty() {
            (None, None)
        } else {
            let pred = model.predict_scaled(val_x)?;
            let n = val_y.len() as f64;
            let loss = pred.iter().zip(val_y).map(|(p, t)| huber_loss(*t, *p, config.huber_delta)).sum::<f64>() / n;
            let mae = pred.iter().zip(val_y).map(|(p, t)| (p - t).abs()).sum::<f64>() / n;
            (Some(loss), Some(mae))
        };
        let metrics = EpochMetrics {
            epoch,
            train_loss: loss_sum / n_train as f64,
            train_mae: abs_sum / n_train as f64,
            val_loss,
            val_mae,
        };
        debug!("epoch {epoch}: loss {:.6} mae {:.6}", metrics.train_loss, metrics.train_mae);
        trace.epochs.push(metrics);
    }
    Ok((model, trace))
}
