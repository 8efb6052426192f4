//! Continuous bag-of-words training with negative sampling.

use rand::distributions::WeightedIndex;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{EmbeddingMatrix, Vocabulary};
use crate::error::{Error, Result};
use crate::neural::sigmoid;
use crate::num::{axpy, dot, Real};
use crate::textprep::TokenSequence;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CbowConfig {
    /// Maximum context radius on each side of the center token.
    pub window: usize,
    pub dim: usize,
    /// Noise words per positive pair.
    pub negative: usize,
    pub epochs: usize,
    pub initial_lr: f64,
    /// Floor of the linearly decaying learning rate.
    pub min_lr: f64,
    pub min_count: u64,
    /// Frequent-token downsampling threshold; 0 disables it.
    pub subsample: f64,
    /// Draw the radius uniformly from `1..=window` per center (otherwise fixed).
    pub dynamic_window: bool,
    pub seed: u64,
}

impl Default for CbowConfig {
    fn default() -> Self {
        Self {
            window: 5,
            dim: 300,
            negative: 5,
            epochs: 5,
            initial_lr: 0.025,
            min_lr: 1e-4,
            min_count: 5,
            subsample: 1e-3,
            dynamic_window: true,
            seed: 1,
        }
    }
}

impl CbowConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(format!("cbow: {m}")));
        if self.window < 1 {
            return bad("window must be at least 1");
        }
        if self.dim < 1 {
            return bad("dim must be at least 1");
        }
        if self.negative < 1 {
            return bad("negative must be at least 1");
        }
        if self.epochs < 1 {
            return bad("epochs must be at least 1");
        }
        if !(self.min_lr > 0.0 && self.initial_lr >= self.min_lr) {
            return bad("learning rates must satisfy 0 < min_lr <= initial_lr");
        }
        if self.subsample.is_nan() || self.subsample < 0.0 {
            return bad("subsample must be non-negative");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochObjective {
    pub epoch: usize,
    pub mean_objective: f64,
    pub updates: u64,
}

#[derive(Debug, Clone)]
pub struct CbowModel {
    pub embeddings: EmbeddingMatrix,
    pub log: Vec<EpochObjective>,
}

impl CbowModel {
    /// `epoch, mean objective` lines.
    pub fn log_lines(&self) -> String {
        self.log
            .iter()
            .map(|e| format!("{}, {:.9}\n", e.epoch, e.mean_objective))
            .collect()
    }
}

/// Loss of one CBOW example and its gradients.
///
/// `hidden` is the mean of the context input vectors; `outputs[j]` is the
/// output vector of target `j` with `labels[j]` true for the center word and
/// false for noise words. The loss is
/// `-sum_j ln sigma(s_j * hidden . outputs[j])` with `s_j = +1/-1`.
/// Writes the gradient with respect to `hidden` into `d_hidden` and with
/// respect to each output vector into `d_outputs[j]`.
pub fn negative_sampling_grad<T: Real>(
    hidden: &[T],
    outputs: &[&[T]],
    labels: &[bool],
    d_hidden: &mut [T],
    d_outputs: &mut [Vec<T>],
) -> T {
    d_hidden.iter_mut().for_each(|x| *x = T::zero());
    let mut loss = T::zero();
    for ((out, &label), d_out) in outputs.iter().zip(labels).zip(d_outputs.iter_mut()) {
        let score = dot(hidden, out);
        let p = sigmoid(score);
        let target = if label { T::one() } else { T::zero() };
        // -ln sigma(x) = softplus(-x), -ln sigma(-x) = softplus(x)
        loss += if label { softplus(-score) } else { softplus(score) };
        let g = p - target;
        axpy(g, out, d_hidden);
        d_out.clear();
        d_out.extend(hidden.iter().map(|&h| g * h));
    }
    loss
}

fn softplus<T: Real>(x: T) -> T {
    if x > T::zero() {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

pub fn build_vocab(corpus: &[TokenSequence], min_count: u64) -> Result<Vocabulary> {
    Vocabulary::build(corpus, min_count)
}

/// Builds the vocabulary with `config.min_count` and trains on `corpus`.
pub fn train_cbow(corpus: &[TokenSequence], config: &CbowConfig) -> Result<CbowModel> {
    config.validate()?;
    let vocab = build_vocab(corpus, config.min_count)?;
    train_cbow_with_vocab(corpus, vocab, config)
}

pub fn train_cbow_with_vocab(
    corpus: &[TokenSequence],
    vocab: Vocabulary,
    config: &CbowConfig,
) -> Result<CbowModel> {
    config.validate()?;
    let dim = config.dim;
    let v = vocab.len();

    let sentences: Vec<Vec<usize>> = corpus
        .iter()
        .map(|s| s.tokens().iter().filter_map(|t| vocab.index(t)).collect::<Vec<_>>())
        .filter(|s| s.len() >= 2)
        .collect();
    if sentences.is_empty() {
        return Err(Error::EmptyInput(
            "no sentence has two in-vocabulary tokens; nothing to train".into(),
        ));
    }
    let total_words: u64 = sentences.iter().map(|s| s.len() as u64).sum();

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut input = vec![0.0f32; v * dim];
    let half = 0.5 / dim as f32;
    for x in input[2 * dim..].iter_mut() {
        *x = rng.gen_range(-half..half);
    }
    let mut output = vec![0.0f32; v * dim];

    let noise_weights: Vec<f64> = (0..v)
        .map(|i| {
            if i < 2 {
                0.0
            } else {
                (vocab.count(i) as f64).powf(0.75)
            }
        })
        .collect();
    let noise = WeightedIndex::new(&noise_weights)
        .map_err(|e| Error::InvalidConfig(format!("noise distribution: {e}")))?;

    let keep_prob: Vec<f32> = (0..v)
        .map(|i| {
            let count = vocab.count(i) as f64;
            if config.subsample <= 0.0 || count == 0.0 {
                return 1.0;
            }
            let t = config.subsample * total_words as f64;
            (((count / t).sqrt() + 1.0) * t / count).min(1.0) as f32
        })
        .collect();

    let planned = (config.epochs as u64 * total_words) as f64;
    let mut processed = 0u64;
    let mut log = Vec::with_capacity(config.epochs);

    let mut hidden = vec![0.0f32; dim];
    let mut d_hidden = vec![0.0f32; dim];
    let mut d_outputs: Vec<Vec<f32>> = vec![Vec::with_capacity(dim); config.negative + 1];
    let mut targets: Vec<usize> = Vec::with_capacity(config.negative + 1);
    let mut labels: Vec<bool> = Vec::with_capacity(config.negative + 1);
    let mut target_rows: Vec<f32> = vec![0.0; (config.negative + 1) * dim];
    let mut kept: Vec<usize> = Vec::new();

    for epoch in 0..config.epochs {
        let mut loss_sum = 0.0f64;
        let mut updates = 0u64;
        for sentence in &sentences {
            let lr = (config.initial_lr * (1.0 - processed as f64 / (planned + 1.0)))
                .max(config.min_lr) as f32;
            processed += sentence.len() as u64;

            kept.clear();
            kept.extend(
                sentence
                    .iter()
                    .copied()
                    .filter(|&w| keep_prob[w] >= 1.0 || rng.gen::<f32>() < keep_prob[w]),
            );
            if kept.len() < 2 {
                continue;
            }
            for pos in 0..kept.len() {
                let radius = if config.dynamic_window {
                    rng.gen_range(1..=config.window)
                } else {
                    config.window
                };
                let lo = pos.saturating_sub(radius);
                let hi = (pos + radius).min(kept.len() - 1);
                let n_ctx = hi - lo;
                if n_ctx == 0 {
                    continue;
                }
                hidden.iter_mut().for_each(|x| *x = 0.0);
                for (j, &w) in kept.iter().enumerate().take(hi + 1).skip(lo) {
                    if j != pos {
                        axpy(1.0, &input[w * dim..(w + 1) * dim], &mut hidden);
                    }
                }
                let scale = 1.0 / n_ctx as f32;
                hidden.iter_mut().for_each(|x| *x *= scale);

                let center = kept[pos];
                targets.clear();
                labels.clear();
                targets.push(center);
                labels.push(true);
                for _ in 0..config.negative {
                    let w = noise.sample(&mut rng);
                    if w != center {
                        targets.push(w);
                        labels.push(false);
                    }
                }
                for (slot, &t) in targets.iter().enumerate() {
                    target_rows[slot * dim..(slot + 1) * dim]
                        .copy_from_slice(&output[t * dim..(t + 1) * dim]);
                }
                let rows: Vec<&[f32]> = target_rows.chunks(dim).take(targets.len()).collect();
                let loss = negative_sampling_grad(
                    &hidden,
                    &rows,
                    &labels,
                    &mut d_hidden,
                    &mut d_outputs[..targets.len()],
                );
                if !loss.is_finite() {
                    return Err(Error::NonFinite(format!("cbow objective in epoch {}", epoch + 1)));
                }
                loss_sum += loss as f64;
                updates += 1;

                for (slot, &t) in targets.iter().enumerate() {
                    axpy(-lr, &d_outputs[slot], &mut output[t * dim..(t + 1) * dim]);
                }
                // every context row takes the full hidden-layer error
                let step = -lr;
                for (j, &w) in kept.iter().enumerate().take(hi + 1).skip(lo) {
                    if j != pos {
                        axpy(step, &d_hidden, &mut input[w * dim..(w + 1) * dim]);
                    }
                }
            }
        }
        let mean_objective = if updates > 0 {
            loss_sum / updates as f64
        } else {
            0.0
        };
        log::info!("cbow epoch {}: mean objective {mean_objective:.6} over {updates} updates", epoch + 1);
        log.push(EpochObjective {
            epoch: epoch + 1,
            mean_objective,
            updates,
        });
    }

    let embeddings = EmbeddingMatrix::new(vocab, dim, input)?;
    Ok(CbowModel { embeddings, log })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::neural::finite_diff_grad;

    fn seq(s: &str) -> TokenSequence {
        TokenSequence::from(s.split_whitespace().map(String::from).collect::<Vec<_>>())
    }

    #[test]
    fn config_validation() {
        assert!(CbowConfig::default().validate().is_ok());
        for cfg in [
            CbowConfig { window: 0, ..Default::default() },
            CbowConfig { dim: 0, ..Default::default() },
            CbowConfig { negative: 0, ..Default::default() },
            CbowConfig { min_lr: 0.0, ..Default::default() },
        ] {
            assert!(cfg.validate().is_err());
        }
    }

    #[test]
    fn single_token_sentence_is_untrainable() {
        let cfg = CbowConfig { min_count: 1, dim: 4, ..Default::default() };
        assert!(matches!(train_cbow(&[seq("lonely")], &cfg), Err(Error::EmptyInput(_))));
    }

    #[test]
    fn pad_row_stays_zero_and_seed_controls_output() {
        let corpus: Vec<_> = (0..50)
            .map(|i| seq(&format!("a{} b{} c{} d{}", i % 3, i % 5, i % 7, i % 2)))
            .collect();
        let cfg = CbowConfig { min_count: 1, dim: 8, epochs: 2, ..Default::default() };
        let a = train_cbow(&corpus, &cfg).unwrap();
        let b = train_cbow(&corpus, &cfg).unwrap();
        let c = train_cbow(&corpus, &CbowConfig { seed: 2, ..cfg.clone() }).unwrap();
        assert!(a.embeddings.row(Vocabulary::PAD).iter().all(|&x| x == 0.0));
        let bits = |m: &CbowModel| m.embeddings.as_slice().iter().map(|x| x.to_bits()).collect::<Vec<_>>();
        assert_eq!(bits(&a), bits(&b));
        assert_ne!(bits(&a), bits(&c));
        assert_eq!(a.log.len(), 2);
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let dim = 6;
        let n_ctx = 3;
        let labels = [true, false, false, false];
        for _ in 0..10 {
            // parameters: n_ctx context rows then one output row per target
            let params: Vec<f64> = (0..(n_ctx + labels.len()) * dim)
                .map(|_| rng.gen_range(-1.0..1.0))
                .collect();
            let objective = |p: &[f64]| -> f64 {
                let mut hidden = vec![0.0; dim];
                for c in 0..n_ctx {
                    axpy(1.0 / n_ctx as f64, &p[c * dim..(c + 1) * dim], &mut hidden);
                }
                let outs: Vec<&[f64]> = (0..labels.len())
                    .map(|j| &p[(n_ctx + j) * dim..(n_ctx + j + 1) * dim])
                    .collect();
                let mut dh = vec![0.0; dim];
                let mut dout = vec![Vec::new(); labels.len()];
                negative_sampling_grad(&hidden, &outs, &labels, &mut dh, &mut dout)
            };
            let numeric = finite_diff_grad(objective, &params, 1e-5);

            let mut hidden = vec![0.0; dim];
            for c in 0..n_ctx {
                axpy(1.0 / n_ctx as f64, &params[c * dim..(c + 1) * dim], &mut hidden);
            }
            let outs: Vec<&[f64]> = (0..labels.len())
                .map(|j| &params[(n_ctx + j) * dim..(n_ctx + j + 1) * dim])
                .collect();
            let mut dh = vec![0.0; dim];
            let mut dout = vec![Vec::new(); labels.len()];
            negative_sampling_grad(&hidden, &outs, &labels, &mut dh, &mut dout);
            let mut analytic = Vec::new();
            for _ in 0..n_ctx {
                analytic.extend(dh.iter().map(|g| g / n_ctx as f64));
            }
            for d in &dout {
                analytic.extend_from_slice(d);
            }
            for (a, n) in analytic.iter().zip(&numeric) {
                let rel = (a - n).abs() / a.abs().max(n.abs()).max(1e-8);
                assert!(rel < 1e-4, "analytic {a} numeric {n}");
            }
        }
    }
}
