use std::collections::HashSet;
use std::path::Path;

use super::{clean, tokenize};

/// The shipped 174-word English stop-list, one entry per line.
pub const ENGLISH_STOPWORDS: &str = include_str!("../../data/stopwords_en.txt");

/// Lookup set built from a stop-list file.
///
/// Each entry is run through [`clean`] and [`tokenize`] before insertion, so
/// a contraction such as `don't` contributes the fragments `don` and `t`,
/// which is what the cleaned article text actually contains.
#[derive(Debug, Clone)]
pub struct StopList {
    words: HashSet<String>,
    entries: usize,
}

impl StopList {
    pub fn english() -> Self {
        Self::parse(ENGLISH_STOPWORDS)
    }

    pub fn parse(text: &str) -> Self {
        let mut words = HashSet::new();
        let mut entries = 0;
        for line in text.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#')) {
            entries += 1;
            for t in tokenize(&clean(line)) {
                words.insert(t.to_string());
            }
        }
        Self { words, entries }
    }

    pub fn from_file(path: impl AsRef<Path>) -> std::io::Result<Self> {
        Ok(Self::parse(&std::fs::read_to_string(path)?))
    }

    /// Number of non-empty lines in the source list.
    pub fn entries(&self) -> usize {
        self.entries
    }

    pub fn contains(&self, token: &str) -> bool {
        self.words.contains(token)
    }

    /// Drops stop-words, keeping the order of the rest.
    pub fn remove<S: AsRef<str>>(&self, tokens: Vec<S>) -> Vec<S> {
        tokens.into_iter().filter(|t| !self.contains(t.as_ref())).collect()
    }
}

impl Default for StopList {
    fn default() -> Self {
        Self::english()
    }
}
