//! `.svchk` checkpoint: a single JSON document holding the full config, the
//! vocabulary in index order, every parameter value, and batch-norm running
//! statistics. Adam moments are not stored.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Model, ModelConfig, ModelError, Network};
use crate::numerics::Matrix;
use crate::textprep::Vocabulary;

pub const CHECKPOINT_FORMAT: &str = "seqveritas-checkpoint";
pub const CHECKPOINT_VERSION: u32 = 1;
pub const CHECKPOINT_EXTENSION: &str = "svchk";

#[derive(Serialize, Deserialize)]
struct TensorRecord {
    name: String,
    rows: usize,
    cols: usize,
    data: Vec<Vec<f64>>,
}

#[derive(Serialize, Deserialize)]
struct RunningStats {
    name: String,
    mean: Vec<f64>,
    var: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct VocabRecord {
    max_size: usize,
    min_freq: usize,
    tokens: Vec<String>,
}

#[derive(Serialize, Deserialize)]
struct CheckpointFile {
    format: String,
    version: u32,
    config: ModelConfig,
    vocabulary: VocabRecord,
    params: Vec<TensorRecord>,
    batchnorm: Vec<RunningStats>,
}

#[derive(Deserialize)]
struct Envelope {
    format: Option<String>,
    version: Option<u32>,
}

pub fn to_json(model: &Model) -> String {
    let net = &model.network;
    let file = CheckpointFile {
        format: CHECKPOINT_FORMAT.to_string(),
        version: CHECKPOINT_VERSION,
        config: model.config.clone(),
        vocabulary: VocabRecord {
            max_size: model.vocab.max_size(),
            min_freq: model.vocab.min_freq(),
            tokens: model.vocab.tokens().to_vec(),
        },
        params: net
            .params()
            .iter()
            .map(|p| TensorRecord {
                name: p.name.clone(),
                rows: p.value.rows(),
                cols: p.value.cols(),
                data: p.value.iter_rows().map(<[f64]>::to_vec).collect(),
            })
            .collect(),
        batchnorm: net
            .blocks
            .iter()
            .filter_map(|b| b.norm.as_ref())
            .map(|n| RunningStats {
                name: n.gamma.name.trim_end_matches(".gamma").to_string(),
                mean: n.running_mean.clone(),
                var: n.running_var.clone(),
            })
            .collect(),
    };
    serde_json::to_string(&file).expect("checkpoint serializes")
}

pub fn from_json(text: &str) -> Result<Model, ModelError> {
    // Check the envelope first so foreign or truncated files fail as BadMagic.
    let envelope: Envelope = serde_json::from_str(text).map_err(|_| ModelError::BadMagic)?;
    if envelope.format.as_deref() != Some(CHECKPOINT_FORMAT) {
        return Err(ModelError::BadMagic);
    }
    match envelope.version {
        Some(CHECKPOINT_VERSION) => {}
        found => return Err(ModelError::VersionMismatch { expected: CHECKPOINT_VERSION, found: found.unwrap_or(0) }),
    }
    let file: CheckpointFile = serde_json::from_str(text).map_err(|e| ModelError::Corrupt(e.to_string()))?;
    let vocab = Vocabulary::from_tokens(file.vocabulary.tokens, file.vocabulary.max_size, file.vocabulary.min_freq)
        .map_err(|e| ModelError::Corrupt(e.to_string()))?;
    let mut network = Network::new(&file.config)?;
    {
        let mut params = network.params_mut();
        if params.len() != file.params.len() {
            return Err(ModelError::ShapeMismatchOnLoad(format!(
                "config implies {} tensors, file has {}",
                params.len(),
                file.params.len()
            )));
        }
        for (p, rec) in params.iter_mut().zip(file.params) {
            if p.name != rec.name || p.value.shape() != (rec.rows, rec.cols) {
                return Err(ModelError::ShapeMismatchOnLoad(format!(
                    "expected {} {:?}, found {} ({}, {})",
                    p.name,
                    p.value.shape(),
                    rec.name,
                    rec.rows,
                    rec.cols
                )));
            }
            let value = Matrix::from_rows(&rec.data).map_err(|e| ModelError::ShapeMismatchOnLoad(e.to_string()))?;
            if value.shape() != (rec.rows, rec.cols) {
                return Err(ModelError::ShapeMismatchOnLoad(format!("{} data is {:?}", rec.name, value.shape())));
            }
            p.value = value;
        }
    }
    let norms: Vec<_> = network.blocks.iter_mut().filter_map(|b| b.norm.as_mut()).collect();
    if norms.len() != file.batchnorm.len() {
        return Err(ModelError::ShapeMismatchOnLoad("batch-norm stage count differs".into()));
    }
    for (n, stats) in norms.into_iter().zip(file.batchnorm) {
        if stats.mean.len() != n.features() || stats.var.len() != n.features() {
            return Err(ModelError::ShapeMismatchOnLoad(format!("running stats for {}", stats.name)));
        }
        n.running_mean = stats.mean;
        n.running_var = stats.var;
    }
    Model::from_parts(file.config, vocab, network)
}

pub fn save(model: &Model, path: impl AsRef<Path>) -> Result<(), ModelError> {
    let path = path.as_ref();
    fs::write(path, to_json(model)).map_err(|source| ModelError::Io { path: path.display().to_string(), source })
}

pub fn load(path: impl AsRef<Path>) -> Result<Model, ModelError> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|source| ModelError::Io { path: path.display().to_string(), source })?;
    let text = std::str::from_utf8(&bytes).map_err(|_| ModelError::BadMagic)?;
    from_json(text)
}
