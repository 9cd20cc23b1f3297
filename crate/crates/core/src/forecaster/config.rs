use serde::{Deserialize, Serialize};

use super::{ForecastError, Result};

/// Architecture and training hyperparameters.
///
/// The default is the full-size network: 50-day window, two 256-unit LSTM
/// layers with 30% dropout, a 256-unit ReLU dense layer, batch 64, 100 epochs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LstmConfig {
    pub window: usize,
    pub horizon: usize,
    pub lstm_layers: Vec<usize>,
    pub dropout_rate: f64,
    pub dense_width: usize,
    pub batch_size: usize,
    pub epochs: usize,
    pub learning_rate: f64,
    pub huber_delta: f64,
    pub seed: u64,
}

impl Default for LstmConfig {
    fn default() -> Self {
        Self {
            window: 50,
            horizon: 1,
            lstm_layers: vec![256, 256],
            dropout_rate: 0.3,
            dense_width: 256,
            batch_size: 64,
            epochs: 100,
            learning_rate: 1e-3,
            huber_delta: 1.0,
            seed: 42,
        }
    }
}

impl LstmConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(ForecastError::InvalidConfig(msg));
        if self.window < 1 {
            return bad("window must be at least 1".into());
        }
        if self.horizon < 1 {
            return bad("horizon must be at least 1".into());
        }
        if self.lstm_layers.is_empty() || self.lstm_layers.contains(&0) {
            return bad(format!("lstm_layers must be non-empty positive widths, got {:?}", self.lstm_layers));
        }
        if self.dense_width == 0 {
            return bad("dense_width must be positive".into());
        }
        if !(0.0..1.0).contains(&self.dropout_rate) {
            return bad(format!("dropout_rate must be in [0, 1), got {}", self.dropout_rate));
        }
        if self.batch_size < 1 {
            return bad("batch_size must be at least 1".into());
        }
        if !(self.learning_rate > 0.0) || !self.learning_rate.is_finite() {
            return bad(format!("learning_rate must be positive, got {}", self.learning_rate));
        }
        if !(self.huber_delta > 0.0) || !self.huber_delta.is_finite() {
            return bad(format!("huber_delta must be positive, got {}", self.huber_delta));
        }
        Ok(())
    }
}
