//! Text normalization and tokenization.
//!
//! Step order: contraction expansion, lowercasing, punctuation stripping
//! (replaced by spaces; URLs and @-mentions go with it), whitespace
//! tokenization, stopword removal. There is no stemming and no spelling
//! correction: intentionally misspelled or masked terms (`f*k`, `fucc`) and
//! plural forms (`blacks`) must survive untouched.

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::sync::LazyLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::embed::Vocabulary;
use crate::error::{Error, Result};

const STOPWORDS: &str = include_str!("../resources/stopwords.txt");
const CONTRACTIONS: &str = include_str!("../resources/contractions.txt");

/// Tokens that must never be filtered; removing them breaks negation.
pub const NEGATORS: [&str; 4] = ["not", "no", "never", "nor"];

/// Characters kept inside tokens even when punctuation is stripped. Masked
/// slurs are commonly written with `*`, and handles/code words with `_`.
const TOKEN_CHARS: [char; 2] = ['*', '_'];

static CONTRACTION_TABLE: LazyLock<HashMap<String, String>> = LazyLock::new(|| {
    resource_lines(CONTRACTIONS)
        .map(|line| {
            let (k, v) = line
                .split_once('\t')
                .expect("contraction table lines are tab separated");
            (k.to_string(), v.to_string())
        })
        .collect()
});

static WORD_RE: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"[\p{L}\p{N}]+(?:['’][\p{L}\p{N}]+)*").unwrap());

static URL_MENTION_RE: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"(?i)https?://\S+|\bwww\.\S+|@\w+").unwrap());

fn resource_lines(src: &str) -> impl Iterator<Item = &str> {
    src.lines()
        .map(str::trim_end)
        .filter(|l| !l.trim().is_empty() && !l.starts_with('#'))
}

/// The bundled English stopword list (negators excluded).
pub fn default_stopwords() -> BTreeSet<String> {
    resource_lines(STOPWORDS).map(|l| l.trim().to_string()).collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawPipelineConfig")]
pub struct PipelineConfig {
    pub lowercase: bool,
    pub expand_contractions: bool,
    pub strip_punctuation: bool,
    stopwords: BTreeSet<String>,
    pub max_len: usize,
}

#[derive(Deserialize)]
#[serde(default, deny_unknown_fields)]
struct RawPipelineConfig {
    lowercase: bool,
    expand_contractions: bool,
    strip_punctuation: bool,
    stopwords: BTreeSet<String>,
    max_len: usize,
}

impl Default for RawPipelineConfig {
    fn default() -> Self {
        let d = PipelineConfig::default();
        Self {
            lowercase: d.lowercase,
            expand_contractions: d.expand_contractions,
            strip_punctuation: d.strip_punctuation,
            stopwords: d.stopwords,
            max_len: d.max_len,
        }
    }
}

impl TryFrom<RawPipelineConfig> for PipelineConfig {
    type Error = Error;

    fn try_from(raw: RawPipelineConfig) -> Result<Self> {
        if let Some(neg) = NEGATORS.iter().find(|n| raw.stopwords.contains(**n)) {
            return Err(Error::InvalidConfig(format!(
                "stopword list must not contain the negator {neg:?}"
            )));
        }
        let cfg = PipelineConfig {
            lowercase: raw.lowercase,
            expand_contractions: raw.expand_contractions,
            strip_punctuation: raw.strip_punctuation,
            stopwords: raw.stopwords,
            max_len: raw.max_len,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            lowercase: true,
            expand_contractions: true,
            strip_punctuation: true,
            stopwords: default_stopwords(),
            max_len: 50,
        }
    }
}

impl PipelineConfig {
    /// Replaces the stopword list; negators are dropped from it.
    pub fn with_stopwords<I, S>(mut self, words: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        self.stopwords = words
            .into_iter()
            .map(Into::into)
            .filter(|w: &String| !NEGATORS.contains(&w.as_str()))
            .collect();
        self
    }

    pub fn with_max_len(mut self, max_len: usize) -> Self {
        self.max_len = max_len;
        self
    }

    pub fn stopwords(&self) -> &BTreeSet<String> {
        &self.stopwords
    }

    pub fn validate(&self) -> Result<()> {
        if self.max_len < 1 {
            return Err(Error::InvalidConfig("max_len must be at least 1".into()));
        }
        Ok(())
    }
}

/// Ordered normalized tokens; none contains whitespace.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct TokenSequence(Vec<String>);

impl TokenSequence {
    pub fn tokens(&self) -> &[String] {
        &self.0
    }

    pub fn into_tokens(self) -> Vec<String> {
        self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn join(&self) -> String {
        self.0.join(" ")
    }
}

impl fmt::Display for TokenSequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.join())
    }
}

impl From<Vec<String>> for TokenSequence {
    /// Splits any token that contains whitespace.
    fn from(tokens: Vec<String>) -> Self {
        if tokens.iter().all(|t| !t.is_empty() && !t.contains(char::is_whitespace)) {
            return TokenSequence(tokens);
        }
        TokenSequence(
            tokens
                .iter()
                .flat_map(|t| t.split_whitespace().map(str::to_string))
                .collect(),
        )
    }
}

fn expand_contractions(text: &str) -> String {
    WORD_RE
        .replace_all(text, |caps: &regex::Captures<'_>| {
            let word = &caps[0];
            let key = word.to_lowercase().replace('’', "'");
            match CONTRACTION_TABLE.get(&key) {
                Some(expansion) => expansion.clone(),
                None => word.to_string(),
            }
        })
        .into_owned()
}

fn strip_punctuation(text: &str) -> String {
    let text = URL_MENTION_RE.replace_all(text, " ");
    text.chars()
        .map(|c| {
            if c.is_alphanumeric() || c.is_whitespace() || TOKEN_CHARS.contains(&c) {
                c
            } else {
                ' '
            }
        })
        .collect()
}

pub fn preprocess(text: &str, config: &PipelineConfig) -> TokenSequence {
    let mut text = if config.expand_contractions {
        expand_contractions(text)
    } else {
        text.to_string()
    };
    if config.lowercase {
        text = text.to_lowercase();
    }
    if config.strip_punctuation {
        text = strip_punctuation(&text);
    }
    let tokens = text
        .split_whitespace()
        .filter(|tok| {
            let lowered;
            let key = if config.lowercase {
                *tok
            } else {
                lowered = tok.to_lowercase();
                lowered.as_str()
            };
            !config.stopwords.contains(key)
        })
        .map(str::to_string)
        .collect();
    TokenSequence(tokens)
}

/// Maps tokens to vocabulary indices, truncating at the tail and
/// right-padding with PAD to exactly `max_len` positions.
pub fn encode(seq: &TokenSequence, vocab: &Vocabulary, max_len: usize) -> Result<Vec<usize>> {
    if max_len < 1 {
        return Err(Error::InvalidConfig("max_len must be at least 1".into()));
    }
    let mut out: Vec<usize> = seq
        .tokens()
        .iter()
        .take(max_len)
        .map(|t| vocab.index_or_unk(t))
        .collect();
    out.resize(max_len, Vocabulary::PAD);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn toks(s: &str) -> Vec<String> {
        preprocess(s, &PipelineConfig::default()).into_tokens()
    }

    #[test]
    fn negation_is_expanded_and_kept() {
        let raw = PipelineConfig::default().with_stopwords(Vec::<String>::new());
        assert_eq!(preprocess("can't", &raw).into_tokens(), vec!["can", "not"]);
        // "can" is a stopword in the bundled list, "not" never is.
        assert_eq!(toks("can't"), vec!["not"]);
        assert_eq!(toks("I CAN’T stand it"), vec!["not", "stand"]);
    }

    #[test]
    fn no_stemming() {
        assert_eq!(toks("They are IDIOTS!!!"), vec!["idiots"]);
        assert_eq!(toks("blacks"), vec!["blacks"]);
    }

    #[test]
    fn punctuation_becomes_space() {
        assert_eq!(toks("black!!white"), vec!["black", "white"]);
    }

    #[test]
    fn masked_spellings_survive() {
        assert_eq!(toks("shut up fc* f*k"), vec!["shut", "fc*", "f*k"]);
    }

    #[test]
    fn urls_mentions_and_hashtags() {
        assert_eq!(
            toks("@someone look https://t.co/abc #MAGA www.example.com/x"),
            vec!["look", "maga"]
        );
    }

    #[test]
    fn stopwords_never_contain_negators() {
        let sw = default_stopwords();
        for n in NEGATORS {
            assert!(!sw.contains(n));
        }
        let cfg = PipelineConfig::default().with_stopwords(["the", "not", "never"]);
        assert_eq!(cfg.stopwords().len(), 1);
    }

    #[test]
    fn config_round_trips_and_rejects_negators() {
        let cfg = PipelineConfig::default().with_max_len(17);
        let json = serde_json::to_string(&cfg).unwrap();
        let back: PipelineConfig = serde_json::from_str(&json).unwrap();
        assert_eq!(back, cfg);
        let bad = json.replacen("\"stopwords\":[", "\"stopwords\":[\"not\",", 1);
        assert!(serde_json::from_str::<PipelineConfig>(&bad).is_err());
    }

    #[test]
    fn encode_pads_truncates_and_maps_unknowns() {
        let corpus = vec![TokenSequence::from(vec!["a".to_string(), "b".to_string()])];
        let vocab = Vocabulary::build(&corpus, 1).unwrap();
        let empty = TokenSequence::default();
        assert_eq!(encode(&empty, &vocab, 4).unwrap(), vec![0, 0, 0, 0]);

        let six: TokenSequence = ["a", "b", "zz", "a", "b", "a"]
            .iter()
            .map(|s| s.to_string())
            .collect::<Vec<_>>()
            .into();
        let enc = encode(&six, &vocab, 4).unwrap();
        let a = vocab.index("a").unwrap();
        let b = vocab.index("b").unwrap();
        assert_eq!(enc, vec![a, b, Vocabulary::UNK, a]);
        assert!(encode(&six, &vocab, 0).is_err());
    }

    proptest! {
        #[test]
        fn preprocess_is_idempotent(text in "[ -~’À-ÿ]{0,80}") {
            let cfg = PipelineConfig::default();
            let once = preprocess(&text, &cfg);
            let twice = preprocess(&once.join(), &cfg);
            prop_assert_eq!(once, twice);
        }

        #[test]
        fn tokens_are_lowercase_without_whitespace(text in "\\PC{0,60}") {
            let seq = preprocess(&text, &PipelineConfig::default());
            for t in seq.tokens() {
                prop_assert!(!t.contains(char::is_whitespace));
                prop_assert_eq!(t.to_lowercase(), t.clone());
            }
        }

        #[test]
        fn negation_survives(prefix in "[a-zA-Z ,.!]{0,30}", suffix in "[a-zA-Z ,.!]{0,30}") {
            let text = format!("{prefix} can't {suffix}");
            let seq = preprocess(&text, &PipelineConfig::default());
            prop_assert!(seq.tokens().iter().any(|t| t == "not"));
        }

        #[test]
        fn encode_length_and_range(words in proptest::collection::vec("[a-e]{1,2}", 0..20), max_len in 1usize..12) {
            let corpus = vec![TokenSequence::from(vec!["a".to_string(), "b".to_string(), "cc".to_string()])];
            let vocab = Vocabulary::build(&corpus, 1).unwrap();
            let enc = encode(&TokenSequence::from(words), &vocab, max_len).unwrap();
            prop_assert_eq!(enc.len(), max_len);
            prop_assert!(enc.iter().all(|&i| i < vocab.len()));
        }
    }
}
