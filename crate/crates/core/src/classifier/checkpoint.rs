//! Single-file checkpoint container.
//!
//! Layout: 8-byte magic `HSCKPT\r\n`, a little-endian `u64` manifest length,
//! the JSON manifest, then every tensor as raw little-endian `f32` values,
//! row-major, in the order the manifest lists them.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{Classifier, ModelConfig, Network, TrainHistory};
use crate::embed::Vocabulary;
use crate::error::{Error, Result};
use crate::neural::{Activation, DenseParams, LstmCellParams, Tensor};

const MAGIC: &[u8; 8] = b"HSCKPT\r\n";
pub const FORMAT_VERSION: &str = "1.0";
const MAJOR: u32 = 1;

#[derive(Serialize, Deserialize)]
struct TensorEntry {
    name: String,
    shape: Vec<usize>,
}

#[derive(Serialize, Deserialize)]
struct Manifest {
    format_version: String,
    config: ModelConfig,
    vocabulary: Vec<String>,
    #[serde(default)]
    counts: Vec<u64>,
    history: TrainHistory,
    tensors: Vec<TensorEntry>,
    payload_sha256: String,
}

impl Classifier {
    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let tensors = self.network.tensors();
        let mut payload = Vec::with_capacity(tensors.iter().map(|t| 4 * t.len()).sum());
        for t in &tensors {
            for x in t.as_slice() {
                payload.extend_from_slice(&x.to_le_bytes());
            }
        }
        let manifest = Manifest {
            format_version: FORMAT_VERSION.to_string(),
            config: self.config.clone(),
            vocabulary: self.vocab.tokens().to_vec(),
            counts: self.vocab.counts().to_vec(),
            history: self.history.clone(),
            tensors: Network::<f32>::TENSOR_NAMES
                .iter()
                .zip(&tensors)
                .map(|(name, t)| TensorEntry {
                    name: name.to_string(),
                    shape: t.shape().to_vec(),
                })
                .collect(),
            payload_sha256: hex::encode(Sha256::digest(&payload)),
        };
        let json = serde_json::to_vec(&manifest)?;
        let mut out = Vec::with_capacity(16 + json.len() + payload.len());
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&(json.len() as u64).to_le_bytes());
        out.extend_from_slice(&json);
        out.extend_from_slice(&payload);
        Ok(out)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let corrupt = |m: &str| Error::Corrupt(m.to_string());
        if bytes.len() < 16 || &bytes[..8] != MAGIC {
            return Err(corrupt("missing checkpoint header"));
        }
        let json_len = u64::from_le_bytes(bytes[8..16].try_into().unwrap()) as usize;
        let json_end = 16usize
            .checked_add(json_len)
            .filter(|&e| e <= bytes.len())
            .ok_or_else(|| corrupt("truncated manifest"))?;
        let manifest: Manifest = serde_json::from_slice(&bytes[16..json_end])
            .map_err(|e| Error::Corrupt(format!("manifest: {e}")))?;

        let major: u32 = manifest
            .format_version
            .split('.')
            .next()
            .and_then(|m| m.parse().ok())
            .ok_or_else(|| corrupt("unreadable format version"))?;
        if major != MAJOR {
            return Err(Error::Version {
                found: manifest.format_version,
                supported: MAJOR,
            });
        }

        let payload = &bytes[json_end..];
        let expected: usize = manifest
            .tensors
            .iter()
            .map(|t| 4 * t.shape.iter().product::<usize>())
            .sum();
        if payload.len() != expected {
            return Err(Error::Corrupt(format!(
                "payload has {} bytes, manifest declares {expected}",
                payload.len()
            )));
        }
        if hex::encode(Sha256::digest(payload)) != manifest.payload_sha256 {
            return Err(corrupt("payload checksum mismatch"));
        }

        let names: Vec<&str> = manifest.tensors.iter().map(|t| t.name.as_str()).collect();
        if names != Network::<f32>::TENSOR_NAMES {
            return Err(Error::Corrupt(format!("unexpected tensor list {names:?}")));
        }
        let mut offset = 0;
        let mut tensors = Vec::with_capacity(manifest.tensors.len());
        for entry in &manifest.tensors {
            let n: usize = entry.shape.iter().product();
            let values: Vec<f32> = payload[offset..offset + 4 * n]
                .chunks_exact(4)
                .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
                .collect();
            offset += 4 * n;
            let t = Tensor::from_vec(&entry.shape, values)?;
            if !t.all_finite() {
                return Err(Error::NonFinite(format!("checkpoint tensor {}", entry.name)));
            }
            tensors.push(t);
        }
        let mut it = tensors.into_iter();
        let mut next = || it.next().unwrap();
        let embedding = next();
        let fwd = LstmCellParams::from_tensors(next(), next(), next())?;
        let bwd = LstmCellParams::from_tensors(next(), next(), next())?;
        let dense1 = DenseParams {
            weights: next(),
            bias: next(),
            activation: manifest.config.dense1_activation,
        };
        let dense2 = DenseParams {
            weights: next(),
            bias: next(),
            activation: Activation::Sigmoid,
        };
        if embedding.shape().len() != 2 {
            return Err(Error::ShapeMismatch("embedding table is not two-dimensional".into()));
        }
        let network = Network {
            embedding,
            fwd,
            bwd,
            dense1,
            dense2,
            sequence_output: manifest.config.sequence_output,
        };
        let counts = if manifest.counts.is_empty() {
            vec![0; manifest.vocabulary.len()]
        } else {
            manifest.counts
        };
        if counts.len() != manifest.vocabulary.len() {
            return Err(Error::Corrupt("vocabulary counts do not match tokens".into()));
        }
        let vocab = Vocabulary::from_parts(manifest.vocabulary, counts)?;
        Classifier::from_parts(manifest.config, vocab, network, manifest.history)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let bytes = self.to_bytes()?;
        fs::write(path, bytes).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::from_bytes(&bytes)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classifier::build;
    use crate::embed::EmbeddingMatrix;
    use crate::textprep::TokenSequence;

    fn model() -> Classifier {
        let corpus = vec![TokenSequence::from(
            ["alpha", "beta", "gamma"].iter().map(|s| s.to_string()).collect::<Vec<_>>(),
        )];
        let vocab = Vocabulary::build(&corpus, 1).unwrap();
        let dim = 4;
        let mut data = vec![0.0f32; vocab.len() * dim];
        for (i, x) in data.iter_mut().enumerate().skip(dim) {
            *x = (i as f32 * 0.37).sin();
        }
        let emb = EmbeddingMatrix::new(vocab, dim, data).unwrap();
        let cfg = ModelConfig {
            max_len: 5,
            embedding_dim: dim,
            hidden: 3,
            dense1: 2,
            ..Default::default()
        };
        build(&cfg, &emb).unwrap()
    }

    /// Rewrites the manifest of a valid checkpoint.
    fn edit_manifest(bytes: &[u8], f: impl FnOnce(&mut serde_json::Value)) -> Vec<u8> {
        let len = u64::from_le_bytes(bytes[8..16].try_into().unwrap()) as usize;
        let mut v: serde_json::Value = serde_json::from_slice(&bytes[16..16 + len]).unwrap();
        f(&mut v);
        let json = serde_json::to_vec(&v).unwrap();
        let mut out = MAGIC.to_vec();
        out.extend_from_slice(&(json.len() as u64).to_le_bytes());
        out.extend_from_slice(&json);
        out.extend_from_slice(&bytes[16 + len..]);
        out
    }

    #[test]
    fn round_trip_predicts_bitwise() {
        let m = model();
        let texts = ["alpha beta", "gamma gamma alpha", "", "unknown words here"];
        let before = m.predict(&texts);
        let back = Classifier::from_bytes(&m.to_bytes().unwrap()).unwrap();
        assert_eq!(back, m);
        let after = back.predict(&texts);
        let bits = |v: &[f64]| v.iter().map(|x| x.to_bits()).collect::<Vec<_>>();
        assert_eq!(bits(&before), bits(&after));
    }

    #[test]
    fn truncated_file_is_corrupt() {
        let bytes = model().to_bytes().unwrap();
        for cut in [4, 20, bytes.len() - 3] {
            assert!(matches!(Classifier::from_bytes(&bytes[..cut]), Err(Error::Corrupt(_))));
        }
    }

    #[test]
    fn flipped_payload_bit_is_corrupt() {
        let mut bytes = model().to_bytes().unwrap();
        let last = bytes.len() - 1;
        bytes[last] ^= 0x10;
        assert!(matches!(Classifier::from_bytes(&bytes), Err(Error::Corrupt(_))));
    }

    #[test]
    fn newer_major_version_is_refused() {
        let bytes = model().to_bytes().unwrap();
        let edited = edit_manifest(&bytes, |v| v["format_version"] = "2.0".into());
        assert!(matches!(Classifier::from_bytes(&edited), Err(Error::Version { .. })));
    }

    #[test]
    fn vocabulary_size_must_match_embedding_rows() {
        let bytes = model().to_bytes().unwrap();
        let edited = edit_manifest(&bytes, |v| {
            v["vocabulary"].as_array_mut().unwrap().push("extra".into());
            v["counts"].as_array_mut().unwrap().push(1.into());
        });
        assert!(matches!(Classifier::from_bytes(&edited), Err(Error::ShapeMismatch(_))));
    }
}
