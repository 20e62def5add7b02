use std::collections::HashMap;

use serde::{Deserialize, Serialize};

pub const PAD: u32 = 0;
pub const OOV: u32 = 1;
pub const PAD_TOKEN: &str = "<pad>";
pub const OOV_TOKEN: &str = "<oov>";

/// Token to index map. Indices 0 and 1 are PAD and OOV; real tokens occupy
/// `2..len()` in frequency-rank order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    tokens: Vec<String>,
    index: HashMap<String, u32>,
    max_size: usize,
    min_freq: usize,
}

#[derive(Serialize, Deserialize)]
struct VocabularyFile {
    max_size: usize,
    min_freq: usize,
    tokens: Vec<String>,
}

#[derive(Debug, thiserror::Error)]
pub enum VocabError {
    #[error("vocabulary file is malformed: {0}")]
    Malformed(String),
}

impl Vocabulary {
    /// Ranks tokens by descending frequency (ties: lexicographic ascending)
    /// and keeps the top `max_size - 2` that occur at least `min_freq` times.
    pub fn build<I, T, S>(corpus: I, max_size: usize, min_freq: usize) -> Self
    where
        I: IntoIterator<Item = T>,
        T: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut counts: HashMap<String, usize> = HashMap::new();
        for doc in corpus {
            for tok in doc {
                let tok = tok.as_ref();
                match counts.get_mut(tok) {
                    Some(c) => *c += 1,
                    None => {
                        counts.insert(tok.to_string(), 1);
                    }
                }
            }
        }
        let mut ranked: Vec<(String, usize)> = counts.into_iter().filter(|(_, c)| *c >= min_freq.max(1)).collect();
        ranked.sort_unstable_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        ranked.truncate(max_size.saturating_sub(2));
        Self::from_ranked(ranked.into_iter().map(|(t, _)| t), max_size, min_freq)
    }

    fn from_ranked(real: impl Iterator<Item = String>, max_size: usize, min_freq: usize) -> Self {
        let mut tokens = vec![PAD_TOKEN.to_string(), OOV_TOKEN.to_string()];
        tokens.extend(real);
        let index = tokens.iter().enumerate().skip(2).map(|(i, t)| (t.clone(), i as u32)).collect();
        Self { tokens, index, max_size, min_freq }
    }

    /// Rebuilds a vocabulary from its token array in index order (PAD and
    /// OOV placeholders included).
    pub fn from_tokens(tokens: Vec<String>, max_size: usize, min_freq: usize) -> Result<Self, VocabError> {
        if tokens.len() < 2 || tokens[0] != PAD_TOKEN || tokens[1] != OOV_TOKEN {
            return Err(VocabError::Malformed("token array must start with <pad>, <oov>".into()));
        }
        let v = Self::from_ranked(tokens.into_iter().skip(2), max_size, min_freq);
        if v.index.len() != v.tokens.len() - 2 {
            return Err(VocabError::Malformed("duplicate token".into()));
        }
        Ok(v)
    }

    /// Total index space, PAD and OOV included.
    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.len() <= 2
    }

    pub fn max_size(&self) -> usize {
        self.max_size
    }

    pub fn min_freq(&self) -> usize {
        self.min_freq
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn get(&self, token: &str) -> Option<u32> {
        self.index.get(token).copied()
    }

    pub fn index_of(&self, token: &str) -> u32 {
        self.get(token).unwrap_or(OOV)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&VocabularyFile {
            max_size: self.max_size,
            min_freq: self.min_freq,
            tokens: self.tokens.clone(),
        })
        .expect("vocabulary serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, VocabError> {
        let f: VocabularyFile = serde_json::from_str(text).map_err(|e| VocabError::Malformed(e.to_string()))?;
        Self::from_tokens(f.tokens, f.max_size, f.min_freq)
    }
}

/// Maps tokens to indices: unknown tokens become OOV, long sequences keep
/// their last `maxlen` tokens, short ones are pre-padded with PAD.
pub fn encode<S: AsRef<str>>(tokens: &[S], vocab: &Vocabulary, maxlen: usize) -> Vec<u32> {
    assert!(maxlen >= 1, "maxlen must be at least 1");
    let tail = &tokens[tokens.len().saturating_sub(maxlen)..];
    let mut out = vec![PAD; maxlen - tail.len()];
    out.extend(tail.iter().map(|t| vocab.index_of(t.as_ref())));
    out
}
