//! Numerical building blocks: activations, loss, LSTM and dense layers,
//! Adam and a central-difference gradient oracle.

mod adam;
mod dense;
mod lstm;
mod tensor;

pub use adam::{adam_step, AdamState};
pub use dense::{Activation, DenseParams};
pub use lstm::{bilstm_forward, lstm_cell_step, LstmCellParams, SequenceOutput};
pub(crate) use lstm::{bilstm_backward, bilstm_forward_cached};
pub use tensor::Tensor;

use crate::error::{Error, Result};
use crate::num::Real;

/// Probabilities are clamped to `[BCE_EPS, 1 - BCE_EPS]` inside the loss.
pub const BCE_EPS: f64 = 1e-7;

/// Logistic function, evaluated so that large `|x|` never overflows.
#[inline]
pub fn sigmoid<T: Real>(x: T) -> T {
    if x >= T::zero() {
        T::one() / (T::one() + (-x).exp())
    } else {
        let e = x.exp();
        e / (T::one() + e)
    }
}

/// Mean binary cross-entropy.
pub fn bce(p: &[f64], y: &[f64]) -> Result<f64> {
    if p.len() != y.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} probabilities for {} labels",
            p.len(),
            y.len()
        )));
    }
    if p.is_empty() {
        return Err(Error::EmptyInput("binary cross-entropy of an empty batch".into()));
    }
    let total: f64 = p
        .iter()
        .zip(y)
        .map(|(&p, &y)| bce_term(p, y))
        .sum();
    Ok(total / p.len() as f64)
}

#[inline]
pub(crate) fn bce_term<T: Real>(p: T, y: T) -> T {
    let eps = T::of(BCE_EPS);
    let p = p.max(eps).min(T::one() - eps);
    -(y * p.ln() + (T::one() - y) * (T::one() - p).ln())
}

/// Central-difference estimate of the gradient of `f` at `params`.
pub fn finite_diff_grad<F>(mut f: F, params: &[f64], step: f64) -> Vec<f64>
where
    F: FnMut(&[f64]) -> f64,
{
    let mut x = params.to_vec();
    (0..x.len())
        .map(|i| {
            let orig = x[i];
            x[i] = orig + step;
            let plus = f(&x);
            x[i] = orig - step;
            let minus = f(&x);
            x[i] = orig;
            (plus - minus) / (2.0 * step)
        })
        .collect()
}

/// Largest `|a - n| / max(|a|, |n|, floor)` over paired entries.
pub fn max_relative_error(analytic: &[f64], numeric: &[f64], floor: f64) -> f64 {
    analytic
        .iter()
        .zip(numeric)
        .map(|(a, n)| (a - n).abs() / a.abs().max(n.abs()).max(floor))
        .fold(0.0, f64::max)
}
