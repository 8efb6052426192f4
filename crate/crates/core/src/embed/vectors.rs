use std::cmp::Ordering;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::Serialize;

use super::Vocabulary;
use crate::error::{Error, Result};

/// `V x d` table of word vectors, row `i` belonging to vocabulary index `i`.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingMatrix {
    vocab: Vocabulary,
    dim: usize,
    data: Vec<f32>,
}

impl EmbeddingMatrix {
    pub fn new(vocab: Vocabulary, dim: usize, data: Vec<f32>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::ShapeMismatch("embedding dimension must be positive".into()));
        }
        if data.len() != vocab.len() * dim {
            return Err(Error::ShapeMismatch(format!(
                "embedding table has {} values, expected {} x {}",
                data.len(),
                vocab.len(),
                dim
            )));
        }
        if let Some(pos) = data.iter().position(|x| !x.is_finite()) {
            return Err(Error::NonFinite(format!("embedding entry {pos}")));
        }
        if data[..dim].iter().any(|&x| x != 0.0) {
            return Err(Error::Schema("PAD embedding row must be zero".into()));
        }
        Ok(Self { vocab, dim, data })
    }

    pub fn vocab(&self) -> &Vocabulary {
        &self.vocab
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn rows(&self) -> usize {
        self.vocab.len()
    }

    pub fn row(&self, index: usize) -> &[f32] {
        &self.data[index * self.dim..(index + 1) * self.dim]
    }

    pub fn vector(&self, token: &str) -> Option<&[f32]> {
        self.vocab.index(token).map(|i| self.row(i))
    }

    pub fn as_slice(&self) -> &[f32] {
        &self.data
    }

    /// Multiplies every entry by `factor`.
    pub fn scaled(&self, factor: f32) -> Self {
        Self {
            vocab: self.vocab.clone(),
            dim: self.dim,
            data: self.data.iter().map(|x| x * factor).collect(),
        }
    }

    /// Ranked neighbors of `word` by cosine, excluding the query and the
    /// reserved rows. Ties are broken by token order.
    pub fn nearest(&self, word: &str, k: usize) -> Result<Vec<Neighbor>> {
        if k == 0 {
            return Err(Error::InvalidConfig("k must be at least 1".into()));
        }
        let q = self
            .vocab
            .index(word)
            .ok_or_else(|| Error::OutOfVocabulary(word.to_string()))?;
        let query = self.row(q);
        let mut scored: Vec<Neighbor> = (2..self.rows())
            .filter(|&i| i != q)
            .map(|i| Neighbor {
                token: self.vocab.token(i).unwrap().to_string(),
                cosine: cosine_or_zero(query, self.row(i)),
            })
            .collect();
        scored.sort_by(|a, b| {
            b.cosine
                .partial_cmp(&a.cosine)
                .unwrap_or(Ordering::Equal)
                .then_with(|| a.token.cmp(&b.token))
        });
        scored.truncate(k);
        Ok(scored)
    }

    /// Writes the `V d` header followed by one `token v1 .. vd` line per row.
    pub fn save_text(&self, path: &Path) -> Result<()> {
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = BufWriter::new(file);
        let io = |e| Error::io(path, e);
        writeln!(w, "{} {}", self.rows(), self.dim).map_err(io)?;
        for i in 0..self.rows() {
            w.write_all(self.vocab.token(i).unwrap().as_bytes()).map_err(io)?;
            for x in self.row(i) {
                write!(w, " {x}").map_err(io)?;
            }
            w.write_all(b"\n").map_err(io)?;
        }
        w.flush().map_err(io)
    }

    /// Reads the word-vector text format. Files without the reserved
    /// `<pad>`/`<unk>` rows get zero rows for them.
    pub fn load_text(path: &Path) -> Result<Self> {
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        let mut lines = BufReader::new(file).lines();
        let header = lines
            .next()
            .ok_or(Error::Parse {
                line: 1,
                message: "missing header".into(),
            })?
            .map_err(|e| Error::io(path, e))?;
        let (rows, dim) = parse_header(&header)?;

        let mut tokens = Vec::with_capacity(rows + 2);
        let mut data = Vec::with_capacity((rows + 2) * dim);
        for (n, line) in lines.enumerate() {
            let lineno = n + 2;
            let line = line.map_err(|e| Error::io(path, e))?;
            if line.trim().is_empty() {
                continue;
            }
            let mut fields = line.split(' ').filter(|f| !f.is_empty());
            let token = fields.next().unwrap().to_string();
            let values: Vec<&str> = fields.collect();
            if values.len() != dim {
                return Err(Error::Parse {
                    line: lineno,
                    message: format!("expected a token and {dim} values, found {} fields", values.len() + 1),
                });
            }
            for v in values {
                let x: f32 = v.parse().map_err(|_| Error::Parse {
                    line: lineno,
                    message: format!("not a number: {v:?}"),
                })?;
                data.push(x);
            }
            tokens.push(token);
        }
        if tokens.len() != rows {
            return Err(Error::Parse {
                line: 1,
                message: format!("header declares {rows} rows, file has {}", tokens.len()),
            });
        }
        if tokens.first().map(String::as_str) != Some(Vocabulary::PAD_TOKEN) {
            let has_unk = tokens.first().map(String::as_str) == Some(Vocabulary::UNK_TOKEN);
            let mut prefix = vec![Vocabulary::PAD_TOKEN.to_string()];
            if !has_unk {
                prefix.push(Vocabulary::UNK_TOKEN.to_string());
            }
            let mut padded = vec![0.0; prefix.len() * dim];
            padded.extend_from_slice(&data);
            prefix.extend(tokens);
            tokens = prefix;
            data = padded;
        }
        let vocab = Vocabulary::from_tokens(tokens).map_err(|e| Error::Parse {
            line: 0,
            message: e.to_string(),
        })?;
        Self::new(vocab, dim, data)
    }
}

fn parse_header(header: &str) -> Result<(usize, usize)> {
    let bad = || Error::Parse {
        line: 1,
        message: format!("malformed header {header:?}, expected \"V d\""),
    };
    let mut it = header.split_whitespace();
    let rows = it.next().and_then(|s| s.parse().ok()).ok_or_else(bad)?;
    let dim: usize = it.next().and_then(|s| s.parse().ok()).ok_or_else(bad)?;
    if it.next().is_some() || dim == 0 {
        return Err(bad());
    }
    Ok((rows, dim))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Neighbor {
    pub token: String,
    pub cosine: f64,
}

fn cosine_or_zero<T: Copy + Into<f64>>(u: &[T], v: &[T]) -> f64 {
    let (mut uv, mut uu, mut vv) = (0.0f64, 0.0f64, 0.0f64);
    for (&a, &b) in u.iter().zip(v) {
        let (a, b) = (a.into(), b.into());
        uv += a * b;
        uu += a * a;
        vv += b * b;
    }
    if uu == 0.0 || vv == 0.0 {
        return 0.0;
    }
    (uv / (uu.sqrt() * vv.sqrt())).clamp(-1.0, 1.0)
}

/// Cosine similarity in `[-1, 1]`, accumulated in 64-bit. Defined as 0 when
/// either vector is all zeros.
pub fn cosine<T: Copy + Into<f64>>(u: &[T], v: &[T]) -> Result<f64> {
    if u.len() != v.len() {
        return Err(Error::ShapeMismatch(format!(
            "cosine of vectors with {} and {} entries",
            u.len(),
            v.len()
        )));
    }
    let zero = |x: &[T]| x.iter().all(|&a| a.into() == 0.0);
    if zero(u) || zero(v) {
        log::warn!("cosine with an all-zero vector is defined as 0");
        return Ok(0.0);
    }
    Ok(cosine_or_zero(u, v))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn matrix() -> EmbeddingMatrix {
        let vocab = Vocabulary::from_tokens(
            ["<pad>", "<unk>", "alpha", "beta", "gamma"]
                .iter()
                .map(|s| s.to_string())
                .collect(),
        )
        .unwrap();
        #[rustfmt::skip]
        let data = vec![
            0.0, 0.0,
            0.1, -0.1,
            1.0, 0.0,
            0.9, 0.1,
            -1.0, 0.2,
        ];
        EmbeddingMatrix::new(vocab, 2, data).unwrap()
    }

    #[test]
    fn cosine_identities() {
        let x = [0.3f64, -1.2, 2.0];
        let neg: Vec<f64> = x.iter().map(|v| -v).collect();
        assert!((cosine(&x, &x).unwrap() - 1.0).abs() < 1e-12);
        assert!((cosine(&x, &neg).unwrap() + 1.0).abs() < 1e-12);
        assert_eq!(cosine(&[1.0f64, 0.0], &[0.0, 1.0]).unwrap(), 0.0);
        assert_eq!(cosine(&[0.0f64, 0.0], &[0.0, 1.0]).unwrap(), 0.0);
        assert!(matches!(cosine(&[1.0f64], &[1.0, 2.0]), Err(Error::ShapeMismatch(_))));
    }

    #[test]
    fn nearest_ranks_and_excludes_reserved() {
        let m = matrix();
        let n = m.nearest("alpha", 10).unwrap();
        let toks: Vec<_> = n.iter().map(|x| x.token.as_str()).collect();
        assert_eq!(toks, vec!["beta", "gamma"]);
        assert!(n[0].cosine > n[1].cosine);
        assert_eq!(m.nearest("alpha", 1).unwrap().len(), 1);
        assert!(matches!(m.nearest("delta", 3), Err(Error::OutOfVocabulary(t)) if t == "delta"));
    }

    #[test]
    fn text_round_trip() {
        let m = matrix();
        let f = tempfile::NamedTempFile::new().unwrap();
        m.save_text(f.path()).unwrap();
        let back = EmbeddingMatrix::load_text(f.path()).unwrap();
        assert_eq!(back.vocab().tokens(), m.vocab().tokens());
        let max_diff = back
            .as_slice()
            .iter()
            .zip(m.as_slice())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0f32, f32::max);
        assert!(max_diff < 1e-6);
    }

    fn load_str(s: &str) -> Result<EmbeddingMatrix> {
        let f = tempfile::NamedTempFile::new().unwrap();
        std::fs::write(f.path(), s).unwrap();
        EmbeddingMatrix::load_text(f.path())
    }

    #[test]
    fn foreign_file_gets_reserved_rows() {
        let m = load_str("2 2\nfoo 1 2\nbar 3 4\n").unwrap();
        assert_eq!(m.rows(), 4);
        assert_eq!(m.vector("bar").unwrap(), &[3.0, 4.0]);
        assert_eq!(m.row(Vocabulary::UNK), &[0.0, 0.0]);
    }

    #[test]
    fn malformed_files() {
        assert!(matches!(load_str("five 2\n"), Err(Error::Parse { line: 1, .. })));
        assert!(matches!(
            load_str("5 2\na 1 2\nb 1 2\nc 1 2\nd 1 2\n"),
            Err(Error::Parse { .. })
        ));
        assert!(matches!(load_str("1 2\nfoo bar 1 2\n"), Err(Error::Parse { line: 2, .. })));
        assert!(matches!(load_str("2 1\na 1\na 2\n"), Err(Error::Parse { .. })));
    }
}
