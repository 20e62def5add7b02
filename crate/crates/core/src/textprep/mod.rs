//! Raw text to fixed-length index sequences:
//! clean → tokenize → drop stop-words → stem → encode.

mod cache;
mod porter;
mod stopwords;
mod vocab;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use cache::{CacheError, EncodedDataset, EncodedExample, MAGIC as CACHE_MAGIC};
pub use porter::stem;
pub use stopwords::{StopList, ENGLISH_STOPWORDS};
pub use vocab::{encode, VocabError, Vocabulary, OOV, OOV_TOKEN, PAD, PAD_TOKEN};

use crate::ingest::Dataset;
use crate::numerics::parallel_enabled;

/// Lowercases, maps every character outside `[a-z0-9]` to a space, collapses
/// whitespace runs and trims.
pub fn clean(raw: &str) -> String {
    let mut out = String::with_capacity(raw.len());
    let mut pending_space = false;
    for ch in raw.chars().flat_map(char::to_lowercase) {
        if ch.is_ascii_lowercase() || ch.is_ascii_digit() {
            if pending_space && !out.is_empty() {
                out.push(' ');
            }
            pending_space = false;
            out.push(ch);
        } else {
            pending_space = true;
        }
    }
    out
}

/// Splits cleaned text on spaces. Never yields empty tokens.
pub fn tokenize(cleaned: &str) -> Vec<&str> {
    cleaned.split(' ').filter(|t| !t.is_empty()).collect()
}

/// Default sequence length after preprocessing.
pub const DEFAULT_MAXLEN: usize = 200;
pub const DEFAULT_VOCAB_SIZE: usize = 20_000;
pub const DEFAULT_MIN_FREQ: usize = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PrepConfig {
    pub maxlen: usize,
    pub vocab_size: usize,
    pub min_freq: usize,
}

impl Default for PrepConfig {
    fn default() -> Self {
        Self { maxlen: DEFAULT_MAXLEN, vocab_size: DEFAULT_VOCAB_SIZE, min_freq: DEFAULT_MIN_FREQ }
    }
}

/// The token pipeline shared by training-time preprocessing and prediction.
#[derive(Debug, Clone, Default)]
pub struct TextPipeline {
    stoplist: StopList,
}

impl TextPipeline {
    pub fn new(stoplist: StopList) -> Self {
        Self { stoplist }
    }

    pub fn stoplist(&self) -> &StopList {
        &self.stoplist
    }

    /// Stop-words are removed before stemming.
    pub fn tokens(&self, raw: &str) -> Vec<String> {
        let cleaned = clean(raw);
        self.stoplist.remove(tokenize(&cleaned)).into_iter().map(stem).collect()
    }

    /// Tokens for every article (title + body), in input order.
    pub fn corpus_tokens(&self, ds: &Dataset) -> Vec<Vec<String>> {
        if parallel_enabled() {
            ds.records.par_iter().map(|a| self.tokens(&a.model_text())).collect()
        } else {
            ds.records.iter().map(|a| self.tokens(&a.model_text())).collect()
        }
    }

    pub fn encode_text(&self, raw: &str, vocab: &Vocabulary, maxlen: usize) -> Vec<u32> {
        encode(&self.tokens(raw), vocab, maxlen)
    }

    /// Builds the vocabulary from `train` alone, then encodes both splits
    /// with it.
    pub fn prepare_split(
        &self,
        train: &Dataset,
        val: &Dataset,
        cfg: &PrepConfig,
    ) -> (Vocabulary, EncodedDataset, EncodedDataset) {
        let train_docs = self.corpus_tokens(train);
        let vocab = Vocabulary::build(&train_docs, cfg.vocab_size, cfg.min_freq);
        let train_enc = encode_corpus(&train_docs, &dataset_labels(train), &vocab, cfg.maxlen);
        let val_enc = encode_corpus(&self.corpus_tokens(val), &dataset_labels(val), &vocab, cfg.maxlen);
        (vocab, train_enc, val_enc)
    }
}

fn dataset_labels(ds: &Dataset) -> Vec<u8> {
    ds.records.iter().map(|a| a.label.as_u8()).collect()
}

/// Encodes pre-tokenized documents with their labels.
pub fn encode_corpus(docs: &[Vec<String>], labels: &[u8], vocab: &Vocabulary, maxlen: usize) -> EncodedDataset {
    EncodedDataset {
        maxlen,
        vocab_size: vocab.len(),
        examples: docs
            .iter()
            .zip(labels)
            .map(|(d, &label)| EncodedExample { indices: encode(d, vocab, maxlen), label })
            .collect(),
    }
}
