//! Corpus ingestion: the two-file fake/true CSV layout, labelling, merging,
//! and seeded splits.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::numerics::Prng;

#[derive(Debug, thiserror::Error)]
pub enum IngestError {
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("header is missing required column `{0}`")]
    MissingColumn(&'static str),
    #[error("malformed CSV record starting at line {row}: {reason}")]
    MalformedRow { row: usize, reason: String },
    #[error("split would leave an empty side ({train} train / {val} validation)")]
    EmptySplit { train: usize, val: usize },
    #[error("train fraction must lie strictly between 0 and 1, got {0}")]
    BadFraction(f64),
    #[error("k must satisfy 2 <= k <= {n}, got {k}")]
    BadK { k: usize, n: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Label {
    True,
    Fake,
}

impl Label {
    /// 1 for fake, 0 for true.
    pub fn as_u8(self) -> u8 {
        match self {
            Label::Fake => 1,
            Label::True => 0,
        }
    }

    pub fn from_u8(v: u8) -> Option<Label> {
        match v {
            1 => Some(Label::Fake),
            0 => Some(Label::True),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Article {
    pub title: String,
    pub body: String,
    pub subject: String,
    /// Carried verbatim, never parsed.
    pub date: String,
    pub label: Label,
    /// Set when the body is empty; such rows are kept so counts stay intact.
    pub degenerate: bool,
}

impl Article {
    /// Model input text: title and body joined by a space. Subject is left out.
    pub fn model_text(&self) -> String {
        let mut s = String::with_capacity(self.title.len() + self.body.len() + 1);
        s.push_str(&self.title);
        s.push(' ');
        s.push_str(&self.body);
        s
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelCounts {
    pub fake: usize,
    #[serde(rename = "true")]
    pub real: usize,
    pub total: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Dataset {
    pub records: Vec<Article>,
}

impl Dataset {
    pub fn new(records: Vec<Article>) -> Self {
        Self { records }
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn label_counts(&self) -> LabelCounts {
        let fake = self.records.iter().filter(|a| a.label == Label::Fake).count();
        LabelCounts { fake, real: self.records.len() - fake, total: self.records.len() }
    }

    fn select(&self, idx: &[usize]) -> Dataset {
        Dataset { records: idx.iter().map(|&i| self.records[i].clone()).collect() }
    }
}

const REQUIRED: [&str; 4] = ["title", "text", "subject", "date"];

/// Reads one CSV file and labels every row with `label`.
///
/// Invalid UTF-8 is replaced with U+FFFD before parsing.
pub fn load_articles(path: impl AsRef<Path>, label: Label) -> Result<Vec<Article>, IngestError> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|source| IngestError::Io { path: path.display().to_string(), source })?;
    parse_articles(&String::from_utf8_lossy(&bytes), label)
}

/// Parses CSV text (header + rows) into articles.
pub fn parse_articles(text: &str, label: Label) -> Result<Vec<Article>, IngestError> {
    let mut records = CsvRecords::new(text);
    let header = match records.next() {
        None => return Err(IngestError::MissingColumn(REQUIRED[0])),
        Some(r) => r?.1,
    };
    let header: Vec<String> = header.iter().map(|h| h.trim().trim_start_matches('\u{feff}').to_lowercase()).collect();
    let mut col = [0usize; 4];
    for (slot, name) in col.iter_mut().zip(REQUIRED) {
        *slot = header.iter().position(|h| h == name).ok_or(IngestError::MissingColumn(name))?;
    }
    let mut out = Vec::new();
    for rec in records {
        let (row, mut fields) = rec?;
        if fields.len() != header.len() {
            return Err(IngestError::MalformedRow {
                row,
                reason: format!("expected {} fields, found {}", header.len(), fields.len()),
            });
        }
        let mut take = |i: usize| std::mem::take(&mut fields[i]);
        let title = take(col[0]);
        let body = take(col[1]);
        let subject = take(col[2]);
        let date = take(col[3]);
        let degenerate = body.trim().is_empty();
        out.push(Article { title, body, subject, date, label, degenerate });
    }
    Ok(out)
}

/// RFC 4180 record reader yielding `(starting line, fields)`.
///
/// Blank lines are skipped. A quote that is never closed, or a closing quote
/// followed by anything but a delimiter, is a `MalformedRow`.
struct CsvRecords<'a> {
    chars: std::iter::Peekable<std::str::Chars<'a>>,
    line: usize,
}

impl<'a> CsvRecords<'a> {
    fn new(text: &'a str) -> Self {
        Self { chars: text.chars().peekable(), line: 1 }
    }

    fn read_record(&mut self) -> Option<Result<(usize, Vec<String>), IngestError>> {
        // skip blank lines
        loop {
            match self.chars.peek() {
                None => return None,
                Some('\n') => {
                    self.chars.next();
                    self.line += 1;
                }
                Some('\r') => {
                    self.chars.next();
                }
                _ => break,
            }
        }
        let start = self.line;
        let mut fields = Vec::new();
        let mut field = String::new();
        loop {
            // at the start of a field
            if self.chars.peek() == Some(&'"') {
                self.chars.next();
                loop {
                    match self.chars.next() {
                        None => {
                            return Some(Err(IngestError::MalformedRow {
                                row: start,
                                reason: "unbalanced quotes".into(),
                            }))
                        }
                        Some('"') => {
                            if self.chars.peek() == Some(&'"') {
                                self.chars.next();
                                field.push('"');
                            } else {
                                break;
                            }
                        }
                        Some(c) => {
                            if c == '\n' {
                                self.line += 1;
                            }
                            field.push(c);
                        }
                    }
                }
                match self.chars.peek() {
                    None | Some(',') | Some('\n') | Some('\r') => {}
                    Some(c) => {
                        return Some(Err(IngestError::MalformedRow {
                            row: start,
                            reason: format!("unexpected {c:?} after closing quote"),
                        }))
                    }
                }
            } else {
                while let Some(&c) = self.chars.peek() {
                    if c == ',' || c == '\n' || c == '\r' {
                        break;
                    }
                    field.push(c);
                    self.chars.next();
                }
            }
            fields.push(std::mem::take(&mut field));
            match self.chars.next() {
                Some(',') => continue,
                Some('\r') => {
                    if self.chars.peek() == Some(&'\n') {
                        self.chars.next();
                    }
                    self.line += 1;
                    break;
                }
                Some('\n') => {
                    self.line += 1;
                    break;
                }
                None => break,
                Some(_) => unreachable!("field loop stops only at delimiters"),
            }
        }
        Some(Ok((start, fields)))
    }
}

impl Iterator for CsvRecords<'_> {
    type Item = Result<(usize, Vec<String>), IngestError>;

    fn next(&mut self) -> Option<Self::Item> {
        self.read_record()
    }
}

/// Concatenates fake then true records and applies a seeded Fisher–Yates shuffle.
pub fn merge_shuffle(fake: Dataset, true_: Dataset, seed: u64) -> Dataset {
    let mut records = fake.records;
    records.extend(true_.records);
    Prng::new(seed).shuffle(&mut records);
    Dataset { records }
}

/// Seeded permutation cut into `floor(train_fraction * n)` train indices and the rest.
pub fn split_indices(n: usize, train_fraction: f64, seed: u64) -> Result<(Vec<usize>, Vec<usize>), IngestError> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(IngestError::BadFraction(train_fraction));
    }
    let n_train = (train_fraction * n as f64).floor() as usize;
    let n_val = n - n_train;
    if n_train == 0 || n_val == 0 {
        return Err(IngestError::EmptySplit { train: n_train, val: n_val });
    }
    let mut perm = Prng::new(seed).permutation(n);
    let val = perm.split_off(n_train);
    Ok((perm, val))
}

pub fn split(ds: &Dataset, train_fraction: f64, seed: u64) -> Result<(Dataset, Dataset), IngestError> {
    let (train, val) = split_indices(ds.len(), train_fraction, seed)?;
    Ok((ds.select(&train), ds.select(&val)))
}

/// Training and validation indices of one fold.
pub type FoldIndices = (Vec<usize>, Vec<usize>);

/// `k` (train, validation) index pairs. The first `n % k` validation folds
/// hold one extra record.
pub fn kfold_indices(n: usize, k: usize, seed: u64) -> Result<Vec<FoldIndices>, IngestError> {
    if k < 2 || k > n {
        return Err(IngestError::BadK { k, n });
    }
    let perm = Prng::new(seed).permutation(n);
    let (base, extra) = (n / k, n % k);
    let mut folds = Vec::with_capacity(k);
    let mut start = 0;
    for f in 0..k {
        let size = base + usize::from(f < extra);
        let end = start + size;
        let val = perm[start..end].to_vec();
        let train = perm[..start].iter().chain(&perm[end..]).copied().collect();
        folds.push((train, val));
        start = end;
    }
    Ok(folds)
}

pub fn kfold(ds: &Dataset, k: usize, seed: u64) -> Result<Vec<(Dataset, Dataset)>, IngestError> {
    Ok(kfold_indices(ds.len(), k, seed)?.into_iter().map(|(t, v)| (ds.select(&t), ds.select(&v))).collect())
}
