//! Synthetic inputs for the benchmarks.

use hatescan::classifier::{self, Classifier};
use hatescan::corpus::{Label, LabeledExample};
use hatescan::embed::{EmbeddingMatrix, Vocabulary};
use hatescan::textprep::TokenSequence;
use hatescan::ModelConfig;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// `n` sentences of 8..=24 tokens drawn from a `vocab`-word lexicon.
pub fn corpus(n: usize, vocab: usize, seed: u64) -> Vec<TokenSequence> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let len = rng.gen_range(8..=24);
            let toks: Vec<String> = (0..len).map(|_| format!("t{}", rng.gen_range(0..vocab))).collect();
            TokenSequence::from(toks)
        })
        .collect()
}

pub fn examples(n: usize, vocab: usize, seed: u64) -> Vec<LabeledExample> {
    corpus(n, vocab, seed)
        .into_iter()
        .enumerate()
        .map(|(i, s)| {
            let label = if i % 2 == 0 { Label::Hate } else { Label::NonHate };
            LabeledExample {
                id: format!("b-{i}"),
                text: s.join(),
                raw_label: label.as_str().into(),
                binary_label: Some(label),
            }
        })
        .collect()
}

pub fn embeddings(vocab: usize, dim: usize, seed: u64) -> EmbeddingMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let tokens: Vec<String> = [Vocabulary::PAD_TOKEN, Vocabulary::UNK_TOKEN]
        .into_iter()
        .map(String::from)
        .chain((0..vocab).map(|i| format!("t{i}")))
        .collect();
    let rows = tokens.len();
    let mut data: Vec<f32> = (0..rows * dim).map(|_| rng.gen_range(-0.5..0.5)).collect();
    data[..dim].fill(0.0);
    EmbeddingMatrix::new(Vocabulary::from_tokens(tokens).unwrap(), dim, data).unwrap()
}

/// A freshly initialized classifier over a random embedding table.
pub fn model(config: &ModelConfig, vocab: usize) -> Classifier {
    classifier::build(config, &embeddings(vocab, config.embedding_dim, 7)).unwrap()
}

/// `n` scores in [0, 1] and matching labels with both classes present.
pub fn scored(n: usize, seed: u64) -> (Vec<f64>, Vec<Label>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|i| {
            let label = if i % 3 == 0 { Label::Hate } else { Label::NonHate };
            let shift = if label == Label::Hate { 0.2 } else { 0.0 };
            ((rng.gen::<f64>() * 0.8 + shift).min(1.0), label)
        })
        .unzip()
}
