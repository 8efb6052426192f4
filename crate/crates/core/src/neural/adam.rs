use crate::error::{Error, Result};
use crate::num::Real;

/// Moment accumulators for one parameter list.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState<T> {
    pub m: Vec<Vec<T>>,
    pub v: Vec<Vec<T>>,
    /// Steps taken so far.
    pub t: u64,
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl<T: Real> AdamState<T> {
    pub fn new(sizes: &[usize], lr: f64) -> Self {
        Self {
            m: sizes.iter().map(|&n| vec![T::zero(); n]).collect(),
            v: sizes.iter().map(|&n| vec![T::zero(); n]).collect(),
            t: 0,
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// One bias-corrected Adam update. Nothing is modified when a shape does not
/// match or a gradient is non-finite.
pub fn adam_step<T: Real>(
    params: &mut [&mut [T]],
    grads: &[&[T]],
    state: &mut AdamState<T>,
) -> Result<()> {
    if params.len() != grads.len() || params.len() != state.m.len() {
        return Err(Error::ShapeMismatch(format!(
            "adam over {} parameters, {} gradients, {} accumulators",
            params.len(),
            grads.len(),
            state.m.len()
        )));
    }
    for (k, (p, g)) in params.iter().zip(grads).enumerate() {
        if p.len() != g.len() || p.len() != state.m[k].len() {
            return Err(Error::ShapeMismatch(format!(
                "adam parameter {k}: {} values, {} gradients, {} accumulators",
                p.len(),
                g.len(),
                state.m[k].len()
            )));
        }
        if let Some(i) = g.iter().position(|x| !x.is_finite()) {
            return Err(Error::NonFinite(format!("gradient {k}[{i}]")));
        }
    }

    state.t += 1;
    let t = state.t as i32;
    let b1 = T::of(state.beta1);
    let b2 = T::of(state.beta2);
    let c1 = T::of(1.0 - state.beta1.powi(t));
    let c2 = T::of(1.0 - state.beta2.powi(t));
    let lr = T::of(state.lr);
    let eps = T::of(state.eps);
    let one = T::one();
    for (k, (p, g)) in params.iter_mut().zip(grads).enumerate() {
        let m = &mut state.m[k];
        let v = &mut state.v[k];
        for i in 0..p.len() {
            let gi = g[i];
            m[i] = b1 * m[i] + (one - b1) * gi;
            v[i] = b2 * v[i] + (one - b2) * gi * gi;
            let m_hat = m[i] / c1;
            let v_hat = v[i] / c2;
            p[i] -= lr * m_hat / (v_hat.sqrt() + eps);
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn minimize_square(steps: usize, lr: f64) -> f64 {
        let mut w = [1.0f64];
        let mut st = AdamState::new(&[1], lr);
        for _ in 0..steps {
            let g = [2.0 * w[0]];
            adam_step(&mut [&mut w[..]], &[&g[..]], &mut st).unwrap();
        }
        w[0]
    }

    #[test]
    fn first_step_moves_by_lr() {
        assert!((minimize_square(1, 0.1) - 0.9).abs() < 1e-7);
    }

    #[test]
    fn converges_on_square() {
        assert!(minimize_square(200, 0.1).abs() < 1e-2);
    }

    #[test]
    fn zero_gradient_is_a_no_op() {
        let mut w = [0.3f64, -2.0];
        let mut st = AdamState::new(&[2], 0.01);
        for _ in 0..10 {
            adam_step(&mut [&mut w[..]], &[&[0.0, 0.0][..]], &mut st).unwrap();
        }
        assert_eq!(w, [0.3, -2.0]);
    }

    #[test]
    fn rejects_bad_input_without_mutating() {
        let mut w = [1.0f64];
        let mut st = AdamState::new(&[1], 0.1);
        assert!(matches!(
            adam_step(&mut [&mut w[..]], &[&[f64::NAN][..]], &mut st),
            Err(Error::NonFinite(_))
        ));
        assert!(matches!(
            adam_step(&mut [&mut w[..]], &[&[1.0, 2.0][..]], &mut st),
            Err(Error::ShapeMismatch(_))
        ));
        assert_eq!(st.t, 0);
        assert_eq!(w, [1.0]);
    }

    #[test]
    fn bitwise_reproducible() {
        let run = || {
            let mut w = [0.7f32, -0.1, 3.0];
            let mut st = AdamState::new(&[3], 1e-3);
            for s in 0..20 {
                let g: Vec<f32> = w.iter().map(|x| x * (s as f32 + 1.0).sin()).collect();
                adam_step(&mut [&mut w[..]], &[&g[..]], &mut st).unwrap();
            }
            w.map(f32::to_bits)
        };
        assert_eq!(run(), run());
    }
}
