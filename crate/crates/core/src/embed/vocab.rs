use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::textprep::TokenSequence;

/// Token/index bijection with reserved PAD (0) and UNK (1) slots.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "VocabRepr", into = "VocabRepr")]
pub struct Vocabulary {
    tokens: Vec<String>,
    counts: Vec<u64>,
    index: HashMap<String, usize>,
}

#[derive(Serialize, Deserialize)]
struct VocabRepr {
    tokens: Vec<String>,
    #[serde(default)]
    counts: Vec<u64>,
}

impl TryFrom<VocabRepr> for Vocabulary {
    type Error = Error;

    fn try_from(r: VocabRepr) -> Result<Self> {
        let counts = if r.counts.is_empty() {
            vec![0; r.tokens.len()]
        } else {
            r.counts
        };
        Vocabulary::from_parts(r.tokens, counts)
    }
}

impl From<Vocabulary> for VocabRepr {
    fn from(v: Vocabulary) -> Self {
        VocabRepr {
            tokens: v.tokens,
            counts: v.counts,
        }
    }
}

impl Vocabulary {
    pub const PAD: usize = 0;
    pub const UNK: usize = 1;
    pub const PAD_TOKEN: &'static str = "<pad>";
    pub const UNK_TOKEN: &'static str = "<unk>";

    /// Keeps tokens seen at least `min_count` times; indices follow
    /// (frequency desc, token asc) starting at 2.
    pub fn build(corpus: &[TokenSequence], min_count: u64) -> Result<Self> {
        if corpus.is_empty() {
            return Err(Error::EmptyInput("vocabulary corpus is empty".into()));
        }
        let mut freq: HashMap<&str, u64> = HashMap::new();
        for seq in corpus {
            for tok in seq.tokens() {
                *freq.entry(tok.as_str()).or_default() += 1;
            }
        }
        let mut kept: Vec<(&str, u64)> = freq
            .into_iter()
            .filter(|(t, c)| *c >= min_count.max(1) && !Self::is_reserved(t))
            .collect();
        if kept.is_empty() {
            return Err(Error::EmptyInput(format!(
                "no token reaches min_count={min_count}"
            )));
        }
        kept.sort_unstable_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));

        let mut tokens = vec![Self::PAD_TOKEN.to_string(), Self::UNK_TOKEN.to_string()];
        let mut counts = vec![0, 0];
        for (t, c) in kept {
            tokens.push(t.to_string());
            counts.push(c);
        }
        Self::from_parts(tokens, counts)
    }

    /// Rebuilds a vocabulary from its ordered token list (reserved tokens
    /// first). Counts are unknown and recorded as zero.
    pub fn from_tokens(tokens: Vec<String>) -> Result<Self> {
        let n = tokens.len();
        Self::from_parts(tokens, vec![0; n])
    }

    pub fn from_parts(tokens: Vec<String>, counts: Vec<u64>) -> Result<Self> {
        if tokens.len() < 2
            || tokens[Self::PAD] != Self::PAD_TOKEN
            || tokens[Self::UNK] != Self::UNK_TOKEN
        {
            return Err(Error::Schema(
                "vocabulary must start with the reserved <pad> and <unk> tokens".into(),
            ));
        }
        if counts.len() != tokens.len() {
            return Err(Error::Schema("vocabulary counts do not match tokens".into()));
        }
        let mut index = HashMap::with_capacity(tokens.len());
        for (i, t) in tokens.iter().enumerate() {
            if t.is_empty() || t.contains(char::is_whitespace) {
                return Err(Error::Schema(format!("invalid vocabulary token {t:?}")));
            }
            if index.insert(t.clone(), i).is_some() {
                return Err(Error::Schema(format!("duplicate vocabulary token {t:?}")));
            }
        }
        Ok(Self {
            tokens,
            counts,
            index,
        })
    }

    pub fn is_reserved(token: &str) -> bool {
        token == Self::PAD_TOKEN || token == Self::UNK_TOKEN
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    /// True when only the reserved slots exist.
    pub fn is_empty(&self) -> bool {
        self.tokens.len() <= 2
    }

    pub fn index(&self, token: &str) -> Option<usize> {
        self.index.get(token).copied()
    }

    pub fn index_or_unk(&self, token: &str) -> usize {
        self.index(token).unwrap_or(Self::UNK)
    }

    pub fn token(&self, index: usize) -> Option<&str> {
        self.tokens.get(index).map(String::as_str)
    }

    pub fn count(&self, index: usize) -> u64 {
        self.counts.get(index).copied().unwrap_or(0)
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn corpus(lines: &[&str]) -> Vec<TokenSequence> {
        lines
            .iter()
            .map(|l| TokenSequence::from(l.split_whitespace().map(String::from).collect::<Vec<_>>()))
            .collect()
    }

    #[test]
    fn min_count_excludes_rare_tokens() {
        let v = Vocabulary::build(&corpus(&["a b a", "b x"]), 2).unwrap();
        assert_eq!(v.index("x"), None);
        assert_eq!(v.len(), 4);
    }

    #[test]
    fn min_count_one_keeps_everything() {
        let v = Vocabulary::build(&corpus(&["c a b", "a"]), 1).unwrap();
        assert_eq!(v.len(), 5);
        let mut idx: Vec<_> = ["a", "b", "c"].iter().map(|t| v.index(t).unwrap()).collect();
        idx.sort();
        assert_eq!(idx, vec![2, 3, 4]);
        assert_eq!(v.token(0), Some(Vocabulary::PAD_TOKEN));
        assert_eq!(v.token(1), Some(Vocabulary::UNK_TOKEN));
    }

    #[test]
    fn ties_break_lexicographically() {
        // a:2 then the tie b:1, c:1 → b before c.
        let v = Vocabulary::build(&corpus(&["c b a a"]), 1).unwrap();
        assert_eq!(v.index("a"), Some(2));
        assert_eq!(v.index("b"), Some(3));
        assert_eq!(v.index("c"), Some(4));
    }

    #[test]
    fn errors_on_empty_and_all_rare() {
        assert!(Vocabulary::build(&[], 1).is_err());
        assert!(Vocabulary::build(&corpus(&["a b"]), 3).is_err());
    }

    #[test]
    fn serde_round_trip() {
        let v = Vocabulary::build(&corpus(&["x y y z"]), 1).unwrap();
        let json = serde_json::to_string(&v).unwrap();
        let back: Vocabulary = serde_json::from_str(&json).unwrap();
        assert_eq!(back, v);
        assert!(Vocabulary::from_tokens(vec!["a".into(), "b".into()]).is_err());
    }
}
