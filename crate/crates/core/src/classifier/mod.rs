//! The three-layer sequence classifier over pretrained word embeddings:
//! bidirectional LSTM, a dense layer (identity activation by default) and a
//! single sigmoid unit. Trained with binary cross-entropy and Adam.

mod checkpoint;
mod network;

pub use checkpoint::FORMAT_VERSION;
pub use network::{EncodedExample, Gradients, Network};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{Label, LabeledExample, SplitBundle};
use crate::embed::{EmbeddingMatrix, Vocabulary};
use crate::error::{Error, Result};
use crate::eval::{decide, MetricsReport};
use crate::neural::{adam_step, sigmoid, Activation, AdamState, SequenceOutput, Tensor};
use crate::textprep::{encode, preprocess, PipelineConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConfig {
    /// Encoded sequence length. Overrides `pipeline.max_len` at build time.
    pub max_len: usize,
    pub embedding_dim: usize,
    pub hidden: usize,
    pub dense1: usize,
    pub dense1_activation: Activation,
    pub sequence_output: SequenceOutput,
    pub embeddings_trainable: bool,
    pub batch_size: usize,
    pub epochs: usize,
    pub learning_rate: f64,
    pub threshold: f64,
    pub seed: u64,
    pub pipeline: PipelineConfig,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            max_len: 50,
            embedding_dim: 300,
            hidden: 128,
            dense1: 64,
            dense1_activation: Activation::Identity,
            sequence_output: SequenceOutput::Final,
            embeddings_trainable: false,
            batch_size: 256,
            epochs: 10,
            learning_rate: 1e-3,
            threshold: 0.5,
            seed: 1,
            pipeline: PipelineConfig::default(),
        }
    }
}

impl ModelConfig {
    pub fn validate(&self) -> Result<()> {
        let sizes = [
            ("max_len", self.max_len),
            ("embedding_dim", self.embedding_dim),
            ("hidden", self.hidden),
            ("dense1", self.dense1),
            ("batch_size", self.batch_size),
            ("epochs", self.epochs),
        ];
        if let Some((name, _)) = sizes.iter().find(|(_, v)| *v < 1) {
            return Err(Error::InvalidConfig(format!("model.{name} must be at least 1")));
        }
        if !(self.threshold > 0.0 && self.threshold < 1.0) {
            return Err(Error::InvalidConfig(format!(
                "threshold {} must lie in (0, 1)",
                self.threshold
            )));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::InvalidConfig("learning_rate must be positive".into()));
        }
        self.pipeline.validate()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub validation_loss: f64,
    pub validation_weighted_f1: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct TrainHistory {
    pub records: Vec<EpochRecord>,
    /// 1-based epoch with the lowest validation loss (first on ties); 0
    /// before training.
    pub selected_epoch: usize,
}

/// A built or trained model together with everything needed to reproduce
/// its predictions from raw text.
#[derive(Debug, Clone, PartialEq)]
pub struct Classifier {
    config: ModelConfig,
    vocab: Vocabulary,
    network: Network<f32>,
    history: TrainHistory,
}

/// Constructs the model: embedding table copied from `embeddings`, every
/// other layer seeded from `config.seed`.
pub fn build(config: &ModelConfig, embeddings: &EmbeddingMatrix) -> Result<Classifier> {
    let mut config = config.clone();
    config.pipeline = config.pipeline.clone().with_max_len(config.max_len);
    config.validate()?;
    if embeddings.dim() != config.embedding_dim {
        return Err(Error::ShapeMismatch(format!(
            "embeddings have dimension {} but the model expects {}",
            embeddings.dim(),
            config.embedding_dim
        )));
    }
    let table = Tensor::from_vec(&[embeddings.rows(), embeddings.dim()], embeddings.as_slice().to_vec())?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let network = Network::init(
        table,
        config.hidden,
        config.dense1,
        config.dense1_activation,
        config.sequence_output,
        config.max_len,
        &mut rng,
    );
    Ok(Classifier {
        config,
        vocab: embeddings.vocab().clone(),
        network,
        history: TrainHistory::default(),
    })
}

impl Classifier {
    pub(crate) fn from_parts(
        config: ModelConfig,
        vocab: Vocabulary,
        network: Network<f32>,
        history: TrainHistory,
    ) -> Result<Self> {
        config.validate()?;
        if vocab.len() != network.vocab_size() {
            return Err(Error::ShapeMismatch(format!(
                "vocabulary has {} tokens but the embedding table has {} rows",
                vocab.len(),
                network.vocab_size()
            )));
        }
        if network.embedding_dim() != config.embedding_dim {
            return Err(Error::ShapeMismatch(format!(
                "embedding table width {} differs from configured {}",
                network.embedding_dim(),
                config.embedding_dim
            )));
        }
        network.check(config.max_len)?;
        Ok(Self {
            config,
            vocab,
            network,
            history,
        })
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    pub fn vocab(&self) -> &Vocabulary {
        &self.vocab
    }

    pub fn network(&self) -> &Network<f32> {
        &self.network
    }

    pub fn network_mut(&mut self) -> &mut Network<f32> {
        &mut self.network
    }

    pub fn history(&self) -> &TrainHistory {
        &self.history
    }

    /// Preprocesses with the model's own pipeline and encodes to `max_len`.
    pub fn encode_text(&self, text: &str) -> Vec<usize> {
        let seq = preprocess(text, &self.config.pipeline);
        encode(&seq, &self.vocab, self.config.max_len).expect("max_len validated at build")
    }

    pub fn encode_examples(&self, examples: &[LabeledExample]) -> Result<Vec<EncodedExample>> {
        examples
            .par_iter()
            .map(|ex| {
                let label = ex.binary_label.ok_or_else(|| {
                    Error::Schema(format!("example {} has no binary label", ex.id))
                })?;
                Ok(EncodedExample {
                    ids: self.encode_text(&ex.text),
                    target: label.target(),
                })
            })
            .collect()
    }

    fn probability_of(&self, ids: &[usize]) -> f64 {
        // sigmoid evaluated in 64-bit keeps saturated outputs strictly inside (0, 1)
        let p = sigmoid(self.network.logit(ids) as f64);
        p.clamp(1e-12, 1.0 - 1e-12)
    }

    /// Hate probability per text, in input order. Each text is evaluated
    /// independently, so results do not depend on how texts are batched.
    pub fn predict<S: AsRef<str> + Sync>(&self, texts: &[S]) -> Vec<f64> {
        texts
            .par_iter()
            .map(|t| self.probability_of(&self.encode_text(t.as_ref())))
            .collect()
    }

    pub fn classify<S: AsRef<str> + Sync>(&self, texts: &[S], threshold: f64) -> Vec<Label> {
        self.predict(texts)
            .into_iter()
            .map(|p| decide(p, threshold))
            .collect()
    }

    fn evaluate_encoded(&self, data: &[EncodedExample]) -> Result<(f64, MetricsReport)> {
        let probs: Vec<f64> = data.par_iter().map(|e| self.probability_of(&e.ids)).collect();
        let targets: Vec<f64> = data.iter().map(|e| e.target).collect();
        let loss = crate::neural::bce(&probs, &targets)?;
        let labels: Vec<Label> = data
            .iter()
            .map(|e| if e.target > 0.5 { Label::Hate } else { Label::NonHate })
            .collect();
        let report = MetricsReport::from_scores(&probs, &labels, self.config.threshold)?;
        Ok((loss, report))
    }
}

/// Mini-batch Adam over one classifier.
pub struct Trainer {
    model: Classifier,
    adam: AdamState<f32>,
}

impl Trainer {
    pub fn new(model: Classifier) -> Self {
        let sizes: Vec<usize> = model
            .network
            .tensors()
            .iter()
            .skip(usize::from(!model.config.embeddings_trainable))
            .map(|t| t.len())
            .collect();
        let adam = AdamState::new(&sizes, model.config.learning_rate);
        Self { model, adam }
    }

    pub fn model(&self) -> &Classifier {
        &self.model
    }

    pub fn into_model(self) -> Classifier {
        self.model
    }

    /// One optimizer step on `batch`; returns the batch loss before the step.
    pub fn step(&mut self, batch: &[EncodedExample]) -> Result<f64> {
        if batch.is_empty() {
            return Err(Error::EmptyInput("empty batch".into()));
        }
        let trainable = self.model.config.embeddings_trainable;
        let (loss, grads) = self.model.network.loss_and_grad(batch, trainable);
        if !loss.is_finite() {
            return Err(Error::NonFinite(format!(
                "batch loss {loss} at optimizer step {}",
                self.adam.t + 1
            )));
        }
        let net = &mut self.model.network;
        let emb_grad = trainable.then(|| grads.dense_embedding(net.vocab_size(), net.embedding_dim()));
        let mut grad_slices: Vec<&[f32]> = Vec::with_capacity(11);
        if let Some(g) = &emb_grad {
            grad_slices.push(g);
        }
        grad_slices.extend(grads.tensors().into_iter().map(|t| t.as_slice()));
        let mut params: Vec<&mut [f32]> = net
            .tensors_mut()
            .into_iter()
            .skip(usize::from(!trainable))
            .map(|t| t.as_mut_slice())
            .collect();
        adam_step(&mut params, &grad_slices, &mut self.adam)?;
        Ok(loss)
    }
}

/// Result of [`train`].
#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub history: TrainHistory,
    /// Parameters from the epoch with the lowest validation loss.
    pub best: Classifier,
}

/// Trains for `config.epochs` epochs with seeded per-epoch shuffling and keeps
/// the parameters of the best validation-loss epoch.
pub fn train(model: &Classifier, splits: &SplitBundle) -> Result<TrainOutcome> {
    if splits.train.is_empty() {
        return Err(Error::EmptyInput("training split is empty".into()));
    }
    if splits.validation.is_empty() {
        return Err(Error::EmptyInput("validation split is empty".into()));
    }
    let train_data = model.encode_examples(&splits.train)?;
    let val_data = model.encode_examples(&splits.validation)?;
    let cfg = model.config.clone();

    let mut trainer = Trainer::new(model.clone());
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_add(0x9e37_79b9_7f4a_7c15));
    let mut order: Vec<usize> = (0..train_data.len()).collect();
    let mut history = TrainHistory::default();
    let mut best: Option<(f64, Network<f32>)> = None;

    for epoch in 1..=cfg.epochs {
        order.shuffle(&mut rng);
        let mut loss_sum = 0.0;
        for (b, chunk) in order.chunks(cfg.batch_size).enumerate() {
            let batch: Vec<EncodedExample> = chunk.iter().map(|&i| train_data[i].clone()).collect();
            let loss = trainer.step(&batch).map_err(|e| match e {
                Error::NonFinite(m) => Error::NonFinite(format!("epoch {epoch}, batch {}: {m}", b + 1)),
                other => other,
            })?;
            loss_sum += loss * batch.len() as f64;
        }
        let train_loss = loss_sum / train_data.len() as f64;
        let (validation_loss, report) = trainer.model.evaluate_encoded(&val_data)?;
        if !validation_loss.is_finite() {
            return Err(Error::NonFinite(format!("validation loss in epoch {epoch}")));
        }
        log::info!(
            "epoch {epoch}: train loss {train_loss:.5}, validation loss {validation_loss:.5}, validation weighted F1 {:.4}",
            report.weighted.f1
        );
        history.records.push(EpochRecord {
            epoch,
            train_loss,
            validation_loss,
            validation_weighted_f1: report.weighted.f1,
        });
        if best.as_ref().is_none_or(|(l, _)| validation_loss < *l) {
            best = Some((validation_loss, trainer.model.network.clone()));
            history.selected_epoch = epoch;
        }
    }

    let (_, network) = best.expect("at least one epoch");
    let mut best = trainer.into_model();
    best.network = network;
    best.history = history.clone();
    Ok(TrainOutcome { history, best })
}

/// Runs the model over a labelled split and computes every metric.
/// Returns the per-example probabilities alongside the report.
pub fn report(model: &Classifier, test: &[LabeledExample]) -> Result<(Vec<f64>, MetricsReport)> {
    if test.is_empty() {
        return Err(Error::EmptyInput("evaluation split is empty".into()));
    }
    let labels: Vec<Label> = test
        .iter()
        .map(|e| {
            e.binary_label
                .ok_or_else(|| Error::Schema(format!("example {} has no binary label", e.id)))
        })
        .collect::<Result<_>>()?;
    let texts: Vec<&str> = test.iter().map(|e| e.text.as_str()).collect();
    let probs = model.predict(&texts);
    let report = MetricsReport::from_scores(&probs, &labels, model.config.threshold)?;
    Ok((probs, report))
}
