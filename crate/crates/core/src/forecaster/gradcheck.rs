//! Central finite-difference check of the BPTT gradients.

use rand::seq::index;

use super::model::Streams;
use super::network::LstmParams;
use super::train::loss_and_gradients;
use super::{LstmModel, Result};

/// Coordinates checked per tensor; smaller tensors are checked exhaustively.
const SAMPLES_PER_TENSOR: usize = 100;
const DENOM_FLOOR: f64 = 1e-8;
const CHECK_STREAM: u64 = 0x6772_6164;

#[derive(Debug, Clone, PartialEq)]
pub struct GradientCheckReport {
    /// Max over checked coordinates of `|a - n| / max(|a|, |n|, 1e-8)`.
    pub max_relative_error: f64,
    /// Per-tensor maximum, in parameter order.
    pub per_tensor: Vec<(String, f64)>,
    /// Tensor name and flat index of the worst coordinate.
    pub worst: (String, usize),
    pub coordinates_checked: usize,
}

impl GradientCheckReport {
    pub fn passes(&self, tolerance: f64) -> bool {
        self.max_relative_error < tolerance
    }
}

/// Compares backpropagated gradients of the mean Huber loss on the given
/// scaled samples with central differences of step `epsilon`. Dropout is off.
pub fn gradient_check(model: &LstmModel, inputs: &[Vec<f64>], targets: &[f64], epsilon: f64) -> Result<GradientCheckReport> {
    let (_, analytic) = loss_and_gradients(model, inputs, targets)?;
    compare_gradients(model, inputs, targets, &analytic, epsilon)
}

/// Like [`gradient_check`] but against caller-supplied gradients.
pub fn compare_gradients(
    model: &LstmModel,
    inputs: &[Vec<f64>],
    targets: &[f64],
    analytic: &LstmParams,
    epsilon: f64,
) -> Result<GradientCheckReport> {
    let mut probe = model.clone();
    let names = model.params.names();
    let mut rng = Streams::rng(model.config.seed, CHECK_STREAM);
    let mut per_tensor = Vec::with_capacity(names.len());
    let mut worst = (names[0].clone(), 0);
    let mut max_err: f64 = 0.0;
    let mut checked = 0;

    for (t, name) in names.iter().enumerate() {
        let len = analytic.slices()[t].len();
        let coords: Vec<usize> = if len <= SAMPLES_PER_TENSOR {
            (0..len).collect()
        } else {
            let mut v = index::sample(&mut rng, len, SAMPLES_PER_TENSOR).into_vec();
            v.sort_unstable();
            v
        };
        let mut tensor_max: f64 = 0.0;
        for k in coords {
            let original = probe.params.slices()[t][k];
            probe.params.slices_mut()[t][k] = original + epsilon;
            let (plus, _) = loss_and_gradients(&probe, inputs, targets)?;
            probe.params.slices_mut()[t][k] = original - epsilon;
            let (minus, _) = loss_and_gradients(&probe, inputs, targets)?;
            probe.params.slices_mut()[t][k] = original;

            let numeric = (plus - minus) / (2.0 * epsilon);
            let a = analytic.slices()[t][k];
            let err = (a - numeric).abs() / a.abs().max(numeric.abs()).max(DENOM_FLOOR);
            if err > tensor_max {
                tensor_max = err;
            }
            if err > max_err {
                max_err = err;
                worst = (name.clone(), k);
            }
            checked += 1;
        }
        per_tensor.push((name.clone(), tensor_max));
    }
    Ok(GradientCheckReport { max_relative_error: max_err, per_tensor, worst, coordinates_checked: checked })
}
