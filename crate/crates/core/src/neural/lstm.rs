//! LSTM cell, unrolled scans and the bidirectional sequence encoder.
//!
//! Gate rows are stacked in the order input, forget, candidate, output
//! (`i, f, g, o`), each block `h` rows tall.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::tensor::{matvec, matvec_t_acc, outer_acc, Tensor};
use super::sigmoid;
use crate::error::{Error, Result};
use crate::num::Real;

#[derive(Debug, Clone, PartialEq)]
pub struct LstmCellParams<T> {
    /// `4h x d`
    pub w_ih: Tensor<T>,
    /// `4h x h`
    pub w_hh: Tensor<T>,
    /// `4h`
    pub bias: Tensor<T>,
}

impl<T: Real> LstmCellParams<T> {
    pub fn zeros(input: usize, hidden: usize) -> Self {
        Self {
            w_ih: Tensor::zeros(&[4 * hidden, input]),
            w_hh: Tensor::zeros(&[4 * hidden, hidden]),
            bias: Tensor::zeros(&[4 * hidden]),
        }
    }

    /// Weights uniform in `±1/sqrt(h)`, biases zero.
    pub fn init<R: Rng>(input: usize, hidden: usize, rng: &mut R) -> Self {
        let bound = 1.0 / (hidden as f64).sqrt();
        Self {
            w_ih: Tensor::uniform(&[4 * hidden, input], bound, rng),
            w_hh: Tensor::uniform(&[4 * hidden, hidden], bound, rng),
            bias: Tensor::zeros(&[4 * hidden]),
        }
    }

    pub fn from_tensors(w_ih: Tensor<T>, w_hh: Tensor<T>, bias: Tensor<T>) -> Result<Self> {
        let p = Self { w_ih, w_hh, bias };
        p.check()?;
        Ok(p)
    }

    pub fn hidden(&self) -> usize {
        self.w_hh.shape()[1]
    }

    pub fn input(&self) -> usize {
        self.w_ih.shape()[1]
    }

    pub fn check(&self) -> Result<()> {
        let ok = self.w_ih.shape().len() == 2
            && self.w_hh.shape().len() == 2
            && self.bias.shape().len() == 1
            && self.w_hh.shape()[0] == 4 * self.w_hh.shape()[1]
            && self.w_ih.shape()[0] == self.w_hh.shape()[0]
            && self.bias.shape()[0] == self.w_hh.shape()[0];
        if ok {
            Ok(())
        } else {
            Err(Error::ShapeMismatch(format!(
                "lstm parameters w_ih {:?}, w_hh {:?}, bias {:?}",
                self.w_ih.shape(),
                self.w_hh.shape(),
                self.bias.shape()
            )))
        }
    }

    pub fn tensors(&self) -> [&Tensor<T>; 3] {
        [&self.w_ih, &self.w_hh, &self.bias]
    }

    pub fn tensors_mut(&mut self) -> [&mut Tensor<T>; 3] {
        [&mut self.w_ih, &mut self.w_hh, &mut self.bias]
    }

    pub fn add_assign(&mut self, other: &Self) {
        self.w_ih.add_assign(&other.w_ih);
        self.w_hh.add_assign(&other.w_hh);
        self.bias.add_assign(&other.bias);
    }

    pub fn cast<U: Real>(&self) -> LstmCellParams<U> {
        LstmCellParams {
            w_ih: self.w_ih.cast(),
            w_hh: self.w_hh.cast(),
            bias: self.bias.cast(),
        }
    }
}

/// Activations of one step, kept for the backward pass.
#[derive(Debug, Clone)]
pub struct StepCache<T> {
    h_prev: Vec<T>,
    c_prev: Vec<T>,
    /// `i, f, g, o` after their nonlinearities, `4h` long.
    gates: Vec<T>,
    tanh_c: Vec<T>,
    pub h: Vec<T>,
    pub c: Vec<T>,
}

fn step_cached<T: Real>(x: &[T], h: &[T], c: &[T], p: &LstmCellParams<T>) -> StepCache<T> {
    let hs = p.hidden();
    let mut z = vec![T::zero(); 4 * hs];
    matvec(&p.w_ih, x, &mut z);
    let mut zh = vec![T::zero(); 4 * hs];
    matvec(&p.w_hh, h, &mut zh);
    for ((zi, zhi), bi) in z.iter_mut().zip(&zh).zip(p.bias.as_slice()) {
        *zi += *zhi + *bi;
    }
    let mut gates = z;
    for (k, v) in gates.iter_mut().enumerate() {
        *v = if (2 * hs..3 * hs).contains(&k) {
            v.tanh()
        } else {
            sigmoid(*v)
        };
    }
    let (i, rest) = gates.split_at(hs);
    let (f, rest) = rest.split_at(hs);
    let (g, o) = rest.split_at(hs);
    let mut c_new = vec![T::zero(); hs];
    let mut tanh_c = vec![T::zero(); hs];
    let mut h_new = vec![T::zero(); hs];
    for k in 0..hs {
        c_new[k] = f[k] * c[k] + i[k] * g[k];
        tanh_c[k] = c_new[k].tanh();
        h_new[k] = o[k] * tanh_c[k];
    }
    StepCache {
        h_prev: h.to_vec(),
        c_prev: c.to_vec(),
        gates,
        tanh_c,
        h: h_new,
        c: c_new,
    }
}

/// One gated update: returns `(h', c')`.
pub fn lstm_cell_step<T: Real>(
    x: &[T],
    h: &[T],
    c: &[T],
    params: &LstmCellParams<T>,
) -> Result<(Vec<T>, Vec<T>)> {
    params.check()?;
    let hs = params.hidden();
    if x.len() != params.input() || h.len() != hs || c.len() != hs {
        return Err(Error::ShapeMismatch(format!(
            "lstm step with x={}, h={}, c={} for d={}, h={hs}",
            x.len(),
            h.len(),
            c.len(),
            params.input()
        )));
    }
    let s = step_cached(x, h, c, params);
    Ok((s.h, s.c))
}

/// Runs the cell over `inputs` in the given order from zero state.
pub(crate) fn scan<T: Real>(inputs: &[&[T]], p: &LstmCellParams<T>) -> Vec<StepCache<T>> {
    let hs = p.hidden();
    let mut h = vec![T::zero(); hs];
    let mut c = vec![T::zero(); hs];
    let mut out = Vec::with_capacity(inputs.len());
    for x in inputs {
        let s = step_cached(x, &h, &c, p);
        h.clone_from(&s.h);
        c.clone_from(&s.c);
        out.push(s);
    }
    out
}

/// Backpropagates through a scan produced by [`scan`].
///
/// `dh_ext[t]` is the loss gradient arriving at the hidden state of step `t`
/// (scan order); `None` means zero. Parameter gradients are accumulated into
/// `grads`; input gradients are written to `dx[t]` when provided.
pub(crate) fn scan_backward<T: Real>(
    inputs: &[&[T]],
    caches: &[StepCache<T>],
    p: &LstmCellParams<T>,
    dh_ext: &dyn Fn(usize) -> Option<Vec<T>>,
    grads: &mut LstmCellParams<T>,
    mut dx: Option<&mut [Vec<T>]>,
) {
    let hs = p.hidden();
    let mut dh_next = vec![T::zero(); hs];
    let mut dc_next = vec![T::zero(); hs];
    let mut dz = vec![T::zero(); 4 * hs];
    let one = T::one();
    for t in (0..caches.len()).rev() {
        let s = &caches[t];
        let mut dh = dh_next.clone();
        if let Some(ext) = dh_ext(t) {
            for (a, b) in dh.iter_mut().zip(ext) {
                *a += b;
            }
        }
        let (i, rest) = s.gates.split_at(hs);
        let (f, rest) = rest.split_at(hs);
        let (g, o) = rest.split_at(hs);
        for k in 0..hs {
            let d_o = dh[k] * s.tanh_c[k];
            let dc = dc_next[k] + dh[k] * o[k] * (one - s.tanh_c[k] * s.tanh_c[k]);
            let d_i = dc * g[k];
            let d_g = dc * i[k];
            let d_f = dc * s.c_prev[k];
            dc_next[k] = dc * f[k];
            dz[k] = d_i * i[k] * (one - i[k]);
            dz[hs + k] = d_f * f[k] * (one - f[k]);
            dz[2 * hs + k] = d_g * (one - g[k] * g[k]);
            dz[3 * hs + k] = d_o * o[k] * (one - o[k]);
        }
        outer_acc(&mut grads.w_ih, &dz, inputs[t]);
        outer_acc(&mut grads.w_hh, &dz, &s.h_prev);
        for (b, d) in grads.bias.as_mut_slice().iter_mut().zip(&dz) {
            *b += *d;
        }
        if let Some(dx) = dx.as_deref_mut() {
            let row = &mut dx[t];
            row.iter_mut().for_each(|v| *v = T::zero());
            matvec_t_acc(&p.w_ih, &dz, row);
        }
        dh_next.iter_mut().for_each(|v| *v = T::zero());
        matvec_t_acc(&p.w_hh, &dz, &mut dh_next);
    }
}

/// How the two scans are summarized into one vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SequenceOutput {
    /// `[h_fwd(last) ; h_bwd(first)]`, length `2h`.
    #[default]
    Final,
    /// `[h_fwd(t) ; h_bwd(t)]` for every position `t`, length `2hL`.
    Flatten,
}

impl SequenceOutput {
    pub fn output_len(self, hidden: usize, max_len: usize) -> usize {
        match self {
            SequenceOutput::Final => 2 * hidden,
            SequenceOutput::Flatten => 2 * hidden * max_len,
        }
    }
}

/// Forward and backward scans kept for backpropagation.
#[derive(Debug, Clone)]
pub struct BiLstmCache<T> {
    fwd: Vec<StepCache<T>>,
    /// In backward-scan order: entry 0 is position `L-1`.
    bwd: Vec<StepCache<T>>,
}

pub fn bilstm_forward<T: Real>(
    seq: &[&[T]],
    fwd: &LstmCellParams<T>,
    bwd: &LstmCellParams<T>,
    mode: SequenceOutput,
) -> Result<Vec<T>> {
    fwd.check()?;
    bwd.check()?;
    if seq.is_empty() {
        return Err(Error::ShapeMismatch("bidirectional scan of an empty sequence".into()));
    }
    if fwd.hidden() != bwd.hidden() {
        return Err(Error::ShapeMismatch("directions have different hidden sizes".into()));
    }
    if let Some(bad) = seq
        .iter()
        .find(|x| x.len() != fwd.input() || x.len() != bwd.input())
    {
        return Err(Error::ShapeMismatch(format!(
            "sequence row of width {} for input size {}",
            bad.len(),
            fwd.input()
        )));
    }
    Ok(bilstm_forward_cached(seq, fwd, bwd, mode).0)
}

pub(crate) fn bilstm_forward_cached<T: Real>(
    seq: &[&[T]],
    fwd: &LstmCellParams<T>,
    bwd: &LstmCellParams<T>,
    mode: SequenceOutput,
) -> (Vec<T>, BiLstmCache<T>) {
    let len = seq.len();
    let hs = fwd.hidden();
    let fwd_steps = scan(seq, fwd);
    let rev: Vec<&[T]> = seq.iter().rev().copied().collect();
    let bwd_steps = scan(&rev, bwd);
    let out = match mode {
        SequenceOutput::Final => {
            let mut v = fwd_steps[len - 1].h.clone();
            v.extend_from_slice(&bwd_steps[len - 1].h);
            v
        }
        SequenceOutput::Flatten => {
            let mut v = Vec::with_capacity(2 * hs * len);
            for t in 0..len {
                v.extend_from_slice(&fwd_steps[t].h);
                v.extend_from_slice(&bwd_steps[len - 1 - t].h);
            }
            v
        }
    };
    (
        out,
        BiLstmCache {
            fwd: fwd_steps,
            bwd: bwd_steps,
        },
    )
}

/// Gradients of a bidirectional scan given `d_out`, the loss gradient with
/// respect to the [`bilstm_forward`] output. Returns input gradients per
/// position when `want_dx`.
#[allow(clippy::too_many_arguments)]
pub(crate) fn bilstm_backward<T: Real>(
    seq: &[&[T]],
    cache: &BiLstmCache<T>,
    fwd: &LstmCellParams<T>,
    bwd: &LstmCellParams<T>,
    mode: SequenceOutput,
    d_out: &[T],
    g_fwd: &mut LstmCellParams<T>,
    g_bwd: &mut LstmCellParams<T>,
    want_dx: bool,
) -> Option<Vec<Vec<T>>> {
    let len = seq.len();
    let hs = fwd.hidden();
    let d = fwd.input();

    let fwd_ext = |t: usize| -> Option<Vec<T>> {
        match mode {
            SequenceOutput::Final => (t == len - 1).then(|| d_out[..hs].to_vec()),
            SequenceOutput::Flatten => Some(d_out[2 * hs * t..2 * hs * t + hs].to_vec()),
        }
    };
    // backward-scan step s covers position len-1-s
    let bwd_ext = |s: usize| -> Option<Vec<T>> {
        match mode {
            SequenceOutput::Final => (s == len - 1).then(|| d_out[hs..2 * hs].to_vec()),
            SequenceOutput::Flatten => {
                let t = len - 1 - s;
                Some(d_out[2 * hs * t + hs..2 * hs * (t + 1)].to_vec())
            }
        }
    };

    let mut dx_f = want_dx.then(|| vec![vec![T::zero(); d]; len]);
    let mut dx_b = want_dx.then(|| vec![vec![T::zero(); d]; len]);
    scan_backward(seq, &cache.fwd, fwd, &fwd_ext, g_fwd, dx_f.as_deref_mut());
    let rev: Vec<&[T]> = seq.iter().rev().copied().collect();
    scan_backward(&rev, &cache.bwd, bwd, &bwd_ext, g_bwd, dx_b.as_deref_mut());

    match (dx_f, dx_b) {
        (Some(mut a), Some(b)) => {
            for (t, row) in a.iter_mut().enumerate() {
                for (x, y) in row.iter_mut().zip(&b[len - 1 - t]) {
                    *x += *y;
                }
            }
            Some(a)
        }
        _ => None,
    }
}
