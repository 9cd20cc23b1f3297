use super::{ForecastError, Result};

/// Sliding windows (stride 1) and their targets `horizon` steps past the end.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowedDataset {
    pub inputs: Vec<Vec<f64>>,
    pub targets: Vec<f64>,
}

impl WindowedDataset {
    pub fn len(&self) -> usize {
        self.targets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }
}

/// `target[i] = closes[i + window + horizon - 1]`.
pub fn make_windows(closes: &[f64], window: usize, horizon: usize) -> Result<WindowedDataset> {
    if window == 0 || horizon == 0 {
        return Err(ForecastError::InvalidConfig("window and horizon must be positive".into()));
    }
    let need = window + horizon;
    if closes.len() < need {
        return Err(ForecastError::TooShort { len: closes.len(), need });
    }
    let n = closes.len() - need + 1;
    Ok(WindowedDataset {
        inputs: (0..n).map(|i| closes[i..i + window].to_vec()).collect(),
        targets: (0..n).map(|i| closes[i + window + horizon - 1]).collect(),
    })
}
