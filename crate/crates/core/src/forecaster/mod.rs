//! Univariate LSTM regression on close prices.
//!
//! Windows of scaled closes pass through a stack of LSTM layers, a ReLU
//! dense layer and a single logistic output unit. Training minimizes the
//! Huber loss by mini-batch Adam with full backpropagation through time.

mod checkpoint;
mod config;
mod gradcheck;
mod model;
mod network;
mod scaler;
mod train;
mod windows;

use thiserror::Error;

pub use checkpoint::{load_checkpoint, read_checkpoint, save_checkpoint, write_checkpoint, CHECKPOINT_MAGIC, CHECKPOINT_VERSION};
pub use config::LstmConfig;
pub use gradcheck::{compare_gradients, gradient_check, GradientCheckReport};
pub use model::{LstmModel, Streams};
pub use network::{backward, forward_batch, lstm_cell_step, Dense, DropoutMasks, ForwardCache, LstmLayer, LstmParams};
pub use scaler::Scaler;
pub use train::{
    loss_and_gradients, train, train_with_scaler, Adam, EpochMetrics, TrainingTrace, TRACE_HEADER, VALIDATION_FRACTION,
};
pub use windows::{make_windows, WindowedDataset};

#[derive(Debug, Error)]
pub enum ForecastError {
    #[error("invalid config: {0}")]
    InvalidConfig(String),
    #[error("series has {len} closes, need at least {need}")]
    TooShort { len: usize, need: usize },
    #[error("cannot fit a scaler to a constant series")]
    ConstantSeries,
    #[error("window has {got} closes, model expects {expected}")]
    WindowLength { expected: usize, got: usize },
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("non-finite value in {0}")]
    NonFinite(String),
    #[error("non-finite loss at epoch {epoch}, batch {batch}")]
    NonFiniteLoss { epoch: usize, batch: usize },
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("empty input")]
    Empty,
    #[error("checkpoint: {0}")]
    Checkpoint(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, ForecastError>;

/// Huber loss of one residual `y - y_hat`.
pub fn huber_loss(y: f64, y_hat: f64, delta: f64) -> f64 {
    let r = (y - y_hat).abs();
    if r <= delta {
        0.5 * r * r
    } else {
        delta * (r - 0.5 * delta)
    }
}

/// Derivative of the Huber loss with respect to the residual.
pub(crate) fn huber_grad(r: f64, delta: f64) -> f64 {
    r.clamp(-delta, delta)
}

/// Mean absolute error.
pub fn mae(y: &[f64], y_hat: &[f64]) -> Result<f64> {
    if y.len() != y_hat.len() {
        return Err(ForecastError::LengthMismatch(y.len(), y_hat.len()));
    }
    if y.is_empty() {
        return Err(ForecastError::Empty);
    }
    Ok(y.iter().zip(y_hat).map(|(a, b)| (a - b).abs()).sum::<f64>() / y.len() as f64)
}
