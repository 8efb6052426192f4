//! Embedding lookup -> BiLSTM -> dense -> dense(sigmoid), with the analytic
//! backward pass.

use std::collections::BTreeMap;

use rand::Rng;
use rayon::prelude::*;

use crate::embed::Vocabulary;
use crate::error::{Error, Result};
use crate::neural::{
    bilstm_backward, bilstm_forward_cached, sigmoid, Activation, DenseParams, LstmCellParams,
    SequenceOutput, Tensor,
};
use crate::num::Real;

/// Examples per gradient work unit. Fixed so the summation order, and hence
/// the result, does not depend on the thread count.
const GRAD_CHUNK: usize = 8;

#[derive(Debug, Clone, PartialEq)]
pub struct Network<T> {
    /// `V x d`
    pub embedding: Tensor<T>,
    pub fwd: LstmCellParams<T>,
    pub bwd: LstmCellParams<T>,
    pub dense1: DenseParams<T>,
    pub dense2: DenseParams<T>,
    pub sequence_output: SequenceOutput,
}

/// Parameter gradients. Embedding gradients are sparse by row.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients<T> {
    pub fwd: LstmCellParams<T>,
    pub bwd: LstmCellParams<T>,
    pub dense1: DenseParams<T>,
    pub dense2: DenseParams<T>,
    pub embedding_rows: BTreeMap<usize, Vec<T>>,
}

impl<T: Real> Gradients<T> {
    fn zeros_like(net: &Network<T>) -> Self {
        let (d, h) = (net.fwd.input(), net.fwd.hidden());
        Self {
            fwd: LstmCellParams::zeros(d, h),
            bwd: LstmCellParams::zeros(d, h),
            dense1: DenseParams::zeros(net.dense1.input(), net.dense1.output(), net.dense1.activation),
            dense2: DenseParams::zeros(net.dense2.input(), net.dense2.output(), net.dense2.activation),
            embedding_rows: BTreeMap::new(),
        }
    }

    fn add_assign(&mut self, other: &Self) {
        self.fwd.add_assign(&other.fwd);
        self.bwd.add_assign(&other.bwd);
        self.dense1.add_assign(&other.dense1);
        self.dense2.add_assign(&other.dense2);
        for (row, g) in &other.embedding_rows {
            let acc = self
                .embedding_rows
                .entry(*row)
                .or_insert_with(|| vec![T::zero(); g.len()]);
            for (a, b) in acc.iter_mut().zip(g) {
                *a += *b;
            }
        }
    }

    /// Embedding gradient as a dense `V x d` array.
    pub fn dense_embedding(&self, rows: usize, dim: usize) -> Vec<T> {
        let mut out = vec![T::zero(); rows * dim];
        for (r, g) in &self.embedding_rows {
            out[r * dim..(r + 1) * dim].copy_from_slice(g);
        }
        out
    }

    /// Non-embedding gradient tensors in [`Network::TENSOR_NAMES`] order
    /// (without the leading embedding).
    pub fn tensors(&self) -> Vec<&Tensor<T>> {
        let mut v: Vec<&Tensor<T>> = Vec::with_capacity(10);
        v.extend(self.fwd.tensors());
        v.extend(self.bwd.tensors());
        v.extend(self.dense1.tensors());
        v.extend(self.dense2.tensors());
        v
    }
}

/// One encoded example: token indices and the 0/1 target.
#[derive(Debug, Clone, PartialEq)]
pub struct EncodedExample {
    pub ids: Vec<usize>,
    pub target: f64,
}

impl<T: Real> Network<T> {
    pub const TENSOR_NAMES: [&'static str; 11] = [
        "embedding",
        "lstm_fwd.w_ih",
        "lstm_fwd.w_hh",
        "lstm_fwd.bias",
        "lstm_bwd.w_ih",
        "lstm_bwd.w_hh",
        "lstm_bwd.bias",
        "dense1.weights",
        "dense1.bias",
        "dense2.weights",
        "dense2.bias",
    ];

    /// Seeded initialization of every layer except the embedding table.
    pub fn init<R: Rng>(
        embedding: Tensor<T>,
        hidden: usize,
        dense1: usize,
        activation: Activation,
        sequence_output: SequenceOutput,
        max_len: usize,
        rng: &mut R,
    ) -> Self {
        let d = embedding.shape()[1];
        let fwd = LstmCellParams::init(d, hidden, rng);
        let bwd = LstmCellParams::init(d, hidden, rng);
        let feat = sequence_output.output_len(hidden, max_len);
        let dense1 = DenseParams::init(feat, dense1, activation, rng);
        let dense2 = DenseParams::init(dense1.output(), 1, Activation::Sigmoid, rng);
        Self {
            embedding,
            fwd,
            bwd,
            dense1,
            dense2,
            sequence_output,
        }
    }

    pub fn embedding_dim(&self) -> usize {
        self.embedding.shape()[1]
    }

    pub fn vocab_size(&self) -> usize {
        self.embedding.shape()[0]
    }

    pub fn check(&self, max_len: usize) -> Result<()> {
        self.fwd.check()?;
        self.bwd.check()?;
        self.dense1.check()?;
        self.dense2.check()?;
        let d = self.embedding_dim();
        let h = self.fwd.hidden();
        let feat = self.sequence_output.output_len(h, max_len);
        let consistent = self.embedding.shape().len() == 2
            && self.fwd.input() == d
            && self.bwd.input() == d
            && self.bwd.hidden() == h
            && self.dense1.input() == feat
            && self.dense2.input() == self.dense1.output()
            && self.dense2.output() == 1
            && self.dense2.activation == Activation::Sigmoid;
        if !consistent {
            return Err(Error::ShapeMismatch(format!(
                "inconsistent network: embedding {:?}, lstm {}x{}, dense1 {:?}, dense2 {:?}",
                self.embedding.shape(),
                d,
                h,
                self.dense1.weights.shape(),
                self.dense2.weights.shape()
            )));
        }
        Ok(())
    }

    pub fn tensors(&self) -> Vec<&Tensor<T>> {
        let mut v = vec![&self.embedding];
        v.extend(self.fwd.tensors());
        v.extend(self.bwd.tensors());
        v.extend(self.dense1.tensors());
        v.extend(self.dense2.tensors());
        v
    }

    pub fn tensors_mut(&mut self) -> Vec<&mut Tensor<T>> {
        let mut v = vec![&mut self.embedding];
        v.extend(self.fwd.tensors_mut());
        v.extend(self.bwd.tensors_mut());
        v.extend(self.dense1.tensors_mut());
        v.extend(self.dense2.tensors_mut());
        v
    }

    /// All parameters as one 64-bit vector, embedding first when included.
    pub fn flatten(&self, include_embedding: bool) -> Vec<f64> {
        let skip = usize::from(!include_embedding);
        self.tensors()
            .into_iter()
            .skip(skip)
            .flat_map(|t| t.as_slice().iter().map(|x| x.as_f64()))
            .collect()
    }

    /// Inverse of [`Network::flatten`].
    pub fn set_flat(&mut self, values: &[f64], include_embedding: bool) {
        let skip = usize::from(!include_embedding);
        let mut it = values.iter();
        for t in self.tensors_mut().into_iter().skip(skip) {
            for x in t.as_mut_slice() {
                *x = T::of(*it.next().expect("flat parameter vector too short"));
            }
        }
        assert!(it.next().is_none(), "flat parameter vector too long");
    }

    pub fn cast<U: Real>(&self) -> Network<U> {
        Network {
            embedding: self.embedding.cast(),
            fwd: self.fwd.cast(),
            bwd: self.bwd.cast(),
            dense1: self.dense1.cast(),
            dense2: self.dense2.cast(),
            sequence_output: self.sequence_output,
        }
    }

    fn rows<'a>(&'a self, ids: &[usize]) -> Vec<&'a [T]> {
        ids.iter().map(|&i| self.embedding.row(i)).collect()
    }

    /// Pre-sigmoid output for one encoded sequence.
    pub fn logit(&self, ids: &[usize]) -> T {
        let seq = self.rows(ids);
        let (h, _) = bilstm_forward_cached(&seq, &self.fwd, &self.bwd, self.sequence_output);
        let (_, a1) = self.dense1.forward(&h);
        let (z2, _) = self.dense2.forward(&a1);
        z2[0]
    }

    pub fn probability(&self, ids: &[usize]) -> T {
        sigmoid(self.logit(ids))
    }

    /// Clamped binary cross-entropy of one example.
    pub fn example_loss(&self, ids: &[usize], target: f64) -> T {
        crate::neural::bce_term(self.probability(ids), T::of(target))
    }

    /// Mean loss over a batch.
    pub fn batch_loss(&self, batch: &[EncodedExample]) -> f64 {
        let total: f64 = batch
            .par_iter()
            .map(|e| self.example_loss(&e.ids, e.target).as_f64())
            .collect::<Vec<_>>()
            .into_iter()
            .sum();
        total / batch.len() as f64
    }

    /// Loss of one example; accumulates `scale * dloss` into `grads`.
    ///
    /// The output-layer gradient uses the fused sigmoid/cross-entropy form
    /// `p - y`, the exact derivative of the unclamped loss.
    fn accumulate_example(
        &self,
        ex: &EncodedExample,
        scale: T,
        with_embedding: bool,
        grads: &mut Gradients<T>,
    ) -> T {
        let seq = self.rows(&ex.ids);
        let (h, cache) = bilstm_forward_cached(&seq, &self.fwd, &self.bwd, self.sequence_output);
        let (z1, a1) = self.dense1.forward(&h);
        let (z2, _) = self.dense2.forward(&a1);
        let p = sigmoid(z2[0]);
        let y = T::of(ex.target);
        let loss = crate::neural::bce_term(p, y);

        let dz2 = [(p - y) * scale];
        let da1 = self.dense2.backward_pre(&a1, &dz2, &mut grads.dense2);
        let dh = self.dense1.backward(&h, &z1, &a1, &da1, &mut grads.dense1);
        let dx = bilstm_backward(
            &seq,
            &cache,
            &self.fwd,
            &self.bwd,
            self.sequence_output,
            &dh,
            &mut grads.fwd,
            &mut grads.bwd,
            with_embedding,
        );
        if let Some(dx) = dx {
            for (&id, g) in ex.ids.iter().zip(dx) {
                if id == Vocabulary::PAD {
                    continue;
                }
                let acc = grads
                    .embedding_rows
                    .entry(id)
                    .or_insert_with(|| vec![T::zero(); g.len()]);
                for (a, b) in acc.iter_mut().zip(&g) {
                    *a += *b;
                }
            }
        }
        loss
    }

    /// Mean loss over `batch` and its gradient. The PAD embedding row never
    /// receives a gradient.
    pub fn loss_and_grad(&self, batch: &[EncodedExample], with_embedding: bool) -> (f64, Gradients<T>) {
        let scale = T::one() / T::of(batch.len() as f64);
        let parts: Vec<(f64, Gradients<T>)> = batch
            .par_chunks(GRAD_CHUNK)
            .map(|chunk| {
                let mut g = Gradients::zeros_like(self);
                let mut loss = 0.0;
                for ex in chunk {
                    loss += self.accumulate_example(ex, scale, with_embedding, &mut g).as_f64();
                }
                (loss, g)
            })
            .collect();
        let mut iter = parts.into_iter();
        let (mut loss, mut grads) = iter.next().unwrap_or_else(|| (0.0, Gradients::zeros_like(self)));
        for (l, g) in iter {
            loss += l;
            grads.add_assign(&g);
        }
        (loss / batch.len().max(1) as f64, grads)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::neural::{finite_diff_grad, max_relative_error};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn tiny(seed: u64, mode: SequenceOutput) -> (Network<f64>, Vec<EncodedExample>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (v, d, h, len) = (9, 4, 3, 5);
        let mut emb = Tensor::<f64>::uniform(&[v, d], 1.0, &mut rng);
        emb.row_mut(0).iter_mut().for_each(|x| *x = 0.0);
        let net = Network::init(emb, h, 4, Activation::Identity, mode, len, &mut rng);
        let batch = (0..3)
            .map(|i| EncodedExample {
                ids: (0..len).map(|_| rng.gen_range(0..v)).collect(),
                target: (i % 2) as f64,
            })
            .collect();
        (net, batch)
    }

    #[test]
    fn gradients_match_finite_differences_both_modes() {
        for mode in [SequenceOutput::Final, SequenceOutput::Flatten] {
            let (net, batch) = tiny(3, mode);
            let flat = net.flatten(true);
            let numeric = finite_diff_grad(
                |p| {
                    let mut n = net.clone();
                    n.set_flat(p, true);
                    n.batch_loss(&batch)
                },
                &flat,
                1e-5,
            );
            let (_, g) = net.loss_and_grad(&batch, true);
            let mut analytic: Vec<f64> = g.dense_embedding(net.vocab_size(), net.embedding_dim());
            analytic.extend(g.tensors().iter().flat_map(|t| t.as_slice().to_vec()));
            // PAD row has no analytic gradient by contract; compare the rest.
            let d = net.embedding_dim();
            let err = max_relative_error(&analytic[d..], &numeric[d..], 1e-6);
            assert!(err < 1e-4, "{mode:?}: max relative error {err}");
        }
    }

    #[test]
    fn flatten_round_trip() {
        let (mut net, _) = tiny(5, SequenceOutput::Final);
        let before = net.clone();
        let flat = net.flatten(false);
        net.set_flat(&flat, false);
        assert_eq!(net, before);
    }
}
