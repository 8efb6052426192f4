//! Domain-specific word embeddings: vocabulary, CBOW training, cosine
//! neighbors and the plain-text word-vector format.

mod cbow;
mod vectors;
mod vocab;

pub use cbow::{
    build_vocab, negative_sampling_grad, train_cbow, train_cbow_with_vocab, CbowConfig, CbowModel,
    EpochObjective,
};
pub use vectors::{cosine, EmbeddingMatrix, Neighbor};
pub use vocab::Vocabulary;

use crate::error::Result;

/// Free-function form of [`EmbeddingMatrix::nearest`].
pub fn nearest(word: &str, k: usize, matrix: &EmbeddingMatrix) -> Result<Vec<Neighbor>> {
    matrix.nearest(word, k)
}
