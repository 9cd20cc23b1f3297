use ndarray::{Array1, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::network::{forward_batch, DropoutMasks, LstmParams};
use super::{ForecastError, LstmConfig, Result, Scaler};

/// Trained network plus the scaler fitted on its training closes.
#[derive(Debug, Clone, PartialEq)]
pub struct LstmModel {
    pub config: LstmConfig,
    pub scaler: Scaler,
    pub params: LstmParams,
}

/// Independent ChaCha8 streams derived from `config.seed`.
pub struct Streams;

impl Streams {
    pub const INIT: u64 = 0;
    pub const SHUFFLE: u64 = 1;
    pub const DROPOUT: u64 = 2;

    pub fn rng(seed: u64, stream: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        rng
    }
}

impl LstmModel {
    pub fn new(config: LstmConfig, scaler: Scaler, params: LstmParams) -> Result<Self> {
        config.validate()?;
        params.check_shapes(&config)?;
        if !params.all_finite() {
            return Err(ForecastError::NonFinite("parameters".into()));
        }
        Ok(Self { config, scaler, params })
    }

    /// Freshly initialized, untrained model.
    pub fn initialize(config: LstmConfig, scaler: Scaler) -> Result<Self> {
        config.validate()?;
        let params = LstmParams::init(&config, &mut Streams::rng(config.seed, Streams::INIT));
        Ok(Self { config, scaler, params })
    }

    fn check_window(&self, window: &[f64]) -> Result<()> {
        if window.len() != self.config.window {
            return Err(ForecastError::WindowLength { expected: self.config.window, got: window.len() });
        }
        Ok(())
    }

    /// Scaled prediction for one scaled window. With `training` set, fresh
    /// dropout masks are drawn from `rng`.
    pub fn forward<R: Rng + ?Sized>(&self, window: &[f64], training: bool, rng: &mut R) -> Result<f64> {
        self.check_window(window)?;
        let input = Array2::from_shape_vec((1, window.len()), window.to_vec()).expect("1 × T");
        let masks = if training { DropoutMasks::sample(&self.config, 1, rng) } else { None };
        Ok(forward_batch(&self.params, input.view(), masks.as_ref())?.output[0])
    }

    /// Inference-mode forward pass on a batch of scaled windows.
    pub fn predict_scaled(&self, windows: &[Vec<f64>]) -> Result<Array1<f64>> {
        if windows.is_empty() {
            return Err(ForecastError::Empty);
        }
        for w in windows {
            self.check_window(w)?;
        }
        let input = Array2::from_shape_fn((windows.len(), self.config.window), |(b, t)| windows[b][t]);
        Ok(forward_batch(&self.params, input.view(), None)?.output)
    }

    /// Hidden-state sequence (`window × width`) of every LSTM layer.
    pub fn hidden_sequences(&self, window: &[f64]) -> Result<Vec<Array2<f64>>> {
        self.check_window(window)?;
        let input = Array2::from_shape_vec((1, window.len()), window.to_vec()).expect("1 × T");
        let cache = forward_batch(&self.params, input.view(), None)?;
        Ok((0..self.params.layers.len())
            .map(|l| {
                let seq = cache.hidden_sequence(l);
                Array2::from_shape_fn((seq.len(), seq[0].ncols()), |(t, j)| seq[t][(0, j)])
            })
            .collect())
    }

    /// Next close after `last_closes` (raw prices, oldest first).
    pub fn predict_next(&self, last_closes: &[f64]) -> Result<f64> {
        self.check_window(last_closes)?;
        let scaled = self.scaler.transform_all(last_closes);
        let y = self.predict_scaled(&[scaled])?[0];
        Ok(self.scaler.inverse_transform(y))
    }
}
