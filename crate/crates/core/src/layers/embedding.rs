use super::{LayerError, ParamKind, ParamTensor};
use crate::numerics::{init_glorot, Matrix, Prng};
use crate::textprep::PAD;

/// Index lookup table. Row 0 (PAD) is pinned to zero and never updated.
#[derive(Debug, Clone)]
pub struct Embedding {
    pub table: ParamTensor,
}

#[derive(Debug)]
pub struct EmbeddingCache {
    indices: Vec<Vec<u32>>,
}

impl Embedding {
    pub fn new(vocab_size: usize, dim: usize, rng: &mut Prng) -> Self {
        let mut value = init_glorot(vocab_size, dim, rng);
        value.row_mut(PAD as usize).fill(0.0);
        Self { table: ParamTensor::new("embedding", ParamKind::Embedding, value) }
    }

    pub fn vocab_size(&self) -> usize {
        self.table.value.rows()
    }

    pub fn dim(&self) -> usize {
        self.table.value.cols()
    }

    /// Looks up a batch of equal-length sequences and returns them
    /// time-major: one `batch x dim` matrix per position.
    pub fn lookup<S: AsRef<[u32]>>(&self, batch: &[S]) -> Result<Vec<Matrix>, LayerError> {
        let v = self.vocab_size();
        let len = batch.first().map_or(0, |s| s.as_ref().len());
        let d = self.dim();
        let mut steps = vec![Matrix::zeros(batch.len(), d); len];
        for (b, seq) in batch.iter().enumerate() {
            let seq = seq.as_ref();
            if seq.len() != len {
                return Err(LayerError::RaggedBatch { expected: len, found: seq.len() });
            }
            for (t, &ix) in seq.iter().enumerate() {
                if ix as usize >= v {
                    return Err(LayerError::IndexOutOfVocab { index: ix, vocab_size: v });
                }
                if ix != PAD {
                    steps[t].row_mut(b).copy_from_slice(self.table.value.row(ix as usize));
                }
            }
        }
        Ok(steps)
    }

    pub fn forward<S: AsRef<[u32]>>(&self, batch: &[S]) -> Result<(Vec<Matrix>, EmbeddingCache), LayerError> {
        let out = self.lookup(batch)?;
        let indices = batch.iter().map(|s| s.as_ref().to_vec()).collect();
        Ok((out, EmbeddingCache { indices }))
    }

    /// Scatters upstream gradients into the table; the PAD row is skipped.
    pub fn backward(&mut self, grad_steps: &[Matrix], cache: EmbeddingCache) -> Result<(), LayerError> {
        for (b, seq) in cache.indices.iter().enumerate() {
            if grad_steps.len() != seq.len() {
                return Err(LayerError::StaleCache("embedding"));
            }
            for (t, &ix) in seq.iter().enumerate() {
                if ix == PAD {
                    continue;
                }
                let g = grad_steps[t].row(b);
                for (acc, x) in self.table.grad.row_mut(ix as usize).iter_mut().zip(g) {
                    *acc += x;
                }
            }
        }
        Ok(())
    }
}
