//! Binary hate-speech classification toolkit.
//!
//! The pipeline runs in stages, one module per stage:
//!
//! - [`corpus`]: dataset loading, label collapsing, balanced combining, splits
//! - [`textprep`]: tweet normalization and fixed-length encoding
//! - [`embed`]: vocabulary, CBOW word2vec training, nearest-neighbour probes
//! - [`neural`]: LSTM/BiLSTM, dense layers, Adam, gradient-check helpers
//! - [`classifier`]: the BiLSTM classifier, its training loop and checkpoints
//! - [`eval`]: confusion counts, weighted P/R/F1, ROC AUC, reports
//! - [`explain`]: LIME-style local explanations
//!
//! Every stochastic step takes an explicit seed.

pub mod classifier;
pub mod corpus;
pub mod embed;
pub mod error;
pub mod eval;
pub mod explain;
pub mod neural;
pub mod num;
pub mod textprep;

pub use classifier::{Classifier, ModelConfig, TrainHistory};
pub use corpus::{DatasetSchema, DatasetStats, Label, LabelMapping, LabeledExample, SplitBundle, SplitRatios};
pub use embed::{CbowConfig, EmbeddingMatrix, Vocabulary};
pub use error::{Error, ErrorKind, Result};
pub use eval::{ConfusionMatrix, MetricsReport};
pub use explain::{Explanation, LimeConfig};
pub use neural::{Activation, SequenceOutput};
pub use num::Real;
pub use textprep::{PipelineConfig, TokenSequence};
