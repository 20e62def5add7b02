//! Binary cache of encoded examples.
//!
//! Layout (all integers little-endian `u32`):
//!
//! ```text
//! b"SVEC1" | maxlen | vocab_size | n
//! n x ( maxlen x index | label: u8 )
//! ```

use std::fs;
use std::io::{self, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

pub const MAGIC: &[u8; 5] = b"SVEC1";

#[derive(Debug, thiserror::Error)]
pub enum CacheError {
    #[error("I/O error on {path}: {source}")]
    Io { path: String, source: io::Error },
    #[error("not an encoded cache (bad magic)")]
    BadMagic,
    #[error("cache is truncated: expected {expected} bytes, found {found}")]
    Truncated { expected: usize, found: usize },
    #[error("record {record}: {reason}")]
    BadRecord { record: usize, reason: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EncodedExample {
    pub indices: Vec<u32>,
    pub label: u8,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct EncodedDataset {
    pub maxlen: usize,
    pub vocab_size: usize,
    pub examples: Vec<EncodedExample>,
}

impl EncodedDataset {
    pub fn len(&self) -> usize {
        self.examples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.examples.is_empty()
    }

    pub fn labels(&self) -> Vec<u8> {
        self.examples.iter().map(|e| e.label).collect()
    }

    pub fn subset(&self, idx: &[usize]) -> EncodedDataset {
        EncodedDataset {
            maxlen: self.maxlen,
            vocab_size: self.vocab_size,
            examples: idx.iter().map(|&i| self.examples[i].clone()).collect(),
        }
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(17 + self.examples.len() * (4 * self.maxlen + 1));
        out.extend_from_slice(MAGIC);
        for v in [self.maxlen, self.vocab_size, self.examples.len()] {
            out.extend_from_slice(&(v as u32).to_le_bytes());
        }
        for ex in &self.examples {
            debug_assert_eq!(ex.indices.len(), self.maxlen);
            for &i in &ex.indices {
                out.extend_from_slice(&i.to_le_bytes());
            }
            out.push(ex.label);
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, CacheError> {
        if bytes.len() < MAGIC.len() || &bytes[..MAGIC.len()] != MAGIC {
            return Err(CacheError::BadMagic);
        }
        if bytes.len() < 17 {
            return Err(CacheError::Truncated { expected: 17, found: bytes.len() });
        }
        let word = |at: usize| u32::from_le_bytes(bytes[at..at + 4].try_into().unwrap()) as usize;
        let (maxlen, vocab_size, n) = (word(5), word(9), word(13));
        let rec = 4 * maxlen + 1;
        let expected = 17 + n * rec;
        if bytes.len() != expected {
            return Err(CacheError::Truncated { expected, found: bytes.len() });
        }
        let mut examples = Vec::with_capacity(n);
        for (r, chunk) in bytes[17..].chunks_exact(rec).enumerate() {
            let indices: Vec<u32> =
                chunk[..4 * maxlen].chunks_exact(4).map(|c| u32::from_le_bytes(c.try_into().unwrap())).collect();
            if let Some(bad) = indices.iter().find(|&&i| i as usize >= vocab_size) {
                return Err(CacheError::BadRecord {
                    record: r,
                    reason: format!("index {bad} >= vocab size {vocab_size}"),
                });
            }
            let label = chunk[4 * maxlen];
            if label > 1 {
                return Err(CacheError::BadRecord { record: r, reason: format!("label byte {label}") });
            }
            examples.push(EncodedExample { indices, label });
        }
        Ok(Self { maxlen, vocab_size, examples })
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<(), CacheError> {
        let path = path.as_ref();
        let io_err = |source| CacheError::Io { path: path.display().to_string(), source };
        let mut f = fs::File::create(path).map_err(io_err)?;
        f.write_all(&self.to_bytes()).map_err(io_err)
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self, CacheError> {
        let path = path.as_ref();
        let bytes = fs::read(path).map_err(|source| CacheError::Io { path: path.display().to_string(), source })?;
        Self::from_bytes(&bytes)
    }
}
