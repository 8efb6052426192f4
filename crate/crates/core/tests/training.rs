mod common;

use hatescan::classifier::{self, report, train, ModelConfig, Trainer};
use hatescan::corpus::{split, SplitRatios};
use hatescan::embed::{train_cbow, CbowConfig, EmbeddingMatrix};
use hatescan::eval::decide;
use hatescan::textprep::{preprocess, TokenSequence};
use hatescan::{Classifier, Label, SplitBundle};
use proptest::prelude::*;

fn config(seed: u64) -> ModelConfig {
    let mut c = ModelConfig {
        max_len: 16,
        embedding_dim: 16,
        hidden: 12,
        dense1: 8,
        batch_size: 32,
        epochs: 3,
        learning_rate: 5e-3,
        seed,
        ..Default::default()
    };
    c.pipeline = c.pipeline.clone().with_max_len(c.max_len);
    c
}

fn setup(n: usize, cfg: &ModelConfig) -> (SplitBundle, EmbeddingMatrix) {
    let data = common::keyword_dataset(n, 99);
    let bundle = split(&data, SplitRatios::default(), 5, true).unwrap();
    let corpus: Vec<TokenSequence> = bundle
        .train
        .iter()
        .map(|e| preprocess(&e.text, &cfg.pipeline))
        .collect();
    let cbow = CbowConfig {
        dim: cfg.embedding_dim,
        epochs: 2,
        min_count: 1,
        ..Default::default()
    };
    (bundle, train_cbow(&corpus, &cbow).unwrap().embeddings)
}

#[test]
fn one_adam_step_lowers_first_batch_loss() {
    for seed in 0..10 {
        let cfg = config(seed);
        let (bundle, emb) = setup(200, &cfg);
        let model = classifier::build(&cfg, &emb).unwrap();
        let batch = model.encode_examples(&bundle.train[..32]).unwrap();
        let mut trainer = Trainer::new(model);
        let before = trainer.step(&batch).unwrap();
        let after = trainer.model().network().batch_loss(&batch);
        assert!(after < before, "seed {seed}: {before} -> {after}");
    }
}

#[test]
fn history_records_every_epoch_and_selects_min_validation_loss() {
    let cfg = ModelConfig { epochs: 10, ..config(3) };
    let (bundle, emb) = setup(300, &cfg);
    let model = classifier::build(&cfg, &emb).unwrap();
    let out = train(&model, &bundle).unwrap();
    assert_eq!(out.history.records.len(), 10);
    let min = out
        .history
        .records
        .iter()
        .map(|r| r.validation_loss)
        .fold(f64::INFINITY, f64::min);
    let chosen = &out.history.records[out.history.selected_epoch - 1];
    assert_eq!(chosen.validation_loss, min);
    // the returned parameters are the selected epoch's
    let val = out.best.encode_examples(&bundle.validation).unwrap();
    let loss = out.best.network().batch_loss(&val);
    assert!((loss - min).abs() < 1e-6, "{loss} vs {min}");
}

#[test]
fn frozen_embeddings_are_bitwise_unchanged() {
    let cfg = config(4);
    let (bundle, emb) = setup(200, &cfg);
    let model = classifier::build(&cfg, &emb).unwrap();
    let out = train(&model, &bundle).unwrap();
    let bits = |m: &Classifier| -> Vec<u32> {
        m.network().embedding.as_slice().iter().map(|x| x.to_bits()).collect()
    };
    assert_eq!(bits(&model), bits(&out.best));
    assert_ne!(model.network().dense2, out.best.network().dense2);
}

#[test]
fn trainable_embeddings_move_but_pad_row_stays_zero() {
    let cfg = ModelConfig { embeddings_trainable: true, ..config(6) };
    let (bundle, emb) = setup(200, &cfg);
    let model = classifier::build(&cfg, &emb).unwrap();
    let out = train(&model, &bundle).unwrap();
    let e = &out.best.network().embedding;
    assert_ne!(e, &model.network().embedding);
    assert!(e.row(0).iter().all(|&x| x == 0.0));
}

#[test]
fn separable_set_reaches_high_training_accuracy() {
    let cfg = ModelConfig {
        embedding_dim: 32,
        hidden: 32,
        dense1: 16,
        epochs: 10,
        embeddings_trainable: true,
        ..config(41)
    };
    let data = common::keyword_dataset(2000, 404);
    let bundle = split(&data, SplitRatios::default(), 41, true).unwrap();
    let corpus: Vec<TokenSequence> = bundle
        .train
        .iter()
        .map(|e| preprocess(&e.text, &cfg.pipeline))
        .collect();
    let cbow = CbowConfig { dim: 32, epochs: 5, min_count: 1, seed: 4, ..Default::default() };
    let emb = train_cbow(&corpus, &cbow).unwrap().embeddings;
    let out = train(&classifier::build(&cfg, &emb).unwrap(), &bundle).unwrap();
    let (_, r) = report(&out.best, &bundle.train).unwrap();
    assert!(r.accuracy >= 0.95, "training accuracy {}", r.accuracy);
}

#[test]
fn empty_text_predicts_the_all_pad_probability() {
    let cfg = config(8);
    let (_, emb) = setup(100, &cfg);
    let model = classifier::build(&cfg, &emb).unwrap();
    let p = model.predict(&["", "the and of"]);
    let direct = f64::from(model.network().probability(&vec![0; cfg.max_len]));
    assert_eq!(p[0], p[1]);
    assert!((p[0] - direct).abs() < 1e-6);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn raising_threshold_never_creates_hate(p in 0.0f64..=1.0, t1 in 0.01f64..0.99, dt in 0.0f64..0.5) {
        let t2 = (t1 + dt).min(0.99);
        if decide(p, t1) == Label::NonHate {
            prop_assert_eq!(decide(p, t2), Label::NonHate);
        }
    }
}
