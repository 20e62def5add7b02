//! Single-layer LSTM, sequence in, final hidden state out.
//!
//! Gate blocks are packed in the 4H axis as `[i, f, g, o]`:
//!
//! ```text
//! z_t = x_t W + h_{t-1} U + b
//! i = σ(z_i)  f = σ(z_f)  g = tanh(z_g)  o = σ(z_o)
//! c_t = f ∘ c_{t-1} + i ∘ g
//! h_t = o ∘ tanh(c_t)
//! ```

use super::{LayerError, ParamKind, ParamTensor, Regularizer};
use crate::numerics::{init_glorot, sigmoid, Matrix, Prng};

#[derive(Debug, Clone)]
pub struct Lstm {
    pub w: ParamTensor,
    pub u: ParamTensor,
    pub b: ParamTensor,
    hidden: usize,
    generation: u64,
}

#[derive(Debug)]
pub struct LstmCache {
    generation: u64,
    xs: Vec<Matrix>,
    /// Post-activation gates per step, `batch x 4H`.
    gates: Vec<Matrix>,
    /// `c_0 ..= c_T`.
    cells: Vec<Matrix>,
    /// `h_0 ..= h_T`.
    hiddens: Vec<Matrix>,
}

impl Lstm {
    /// Glorot kernels, zero biases except the forget block which starts at 1.
    pub fn new(input: usize, hidden: usize, rng: &mut Prng) -> Self {
        let w = init_glorot(input, 4 * hidden, rng);
        let u = init_glorot(hidden, 4 * hidden, rng);
        let mut b = Matrix::zeros(1, 4 * hidden);
        b.as_mut_slice()[hidden..2 * hidden].fill(1.0);
        Self::from_parts(w, u, b).expect("shapes are consistent by construction")
    }

    pub fn from_parts(w: Matrix, u: Matrix, b: Matrix) -> Result<Self, LayerError> {
        let hidden = u.rows();
        let ok = u.cols() == 4 * hidden && w.cols() == 4 * hidden && b.shape() == (1, 4 * hidden);
        if !ok {
            return Err(LayerError::Shape(format!(
                "lstm parts W {:?}, U {:?}, b {:?}",
                w.shape(),
                u.shape(),
                b.shape()
            )));
        }
        Ok(Self {
            w: ParamTensor::new("lstm.W", ParamKind::Kernel, w),
            u: ParamTensor::new("lstm.U", ParamKind::Kernel, u),
            b: ParamTensor::new("lstm.b", ParamKind::Bias, b),
            hidden,
            generation: 0,
        })
    }

    pub fn set_regularizer(&mut self, reg: Regularizer) {
        self.w.regularizer = reg;
        self.u.regularizer = reg;
    }

    pub fn hidden(&self) -> usize {
        self.hidden
    }

    pub fn input(&self) -> usize {
        self.w.value.rows()
    }

    pub fn param_count(&self) -> usize {
        self.w.len() + self.u.len() + self.b.len()
    }

    fn step(&self, x: &Matrix, h: &Matrix, c: &Matrix) -> Result<(Matrix, Matrix, Matrix), LayerError> {
        if x.cols() != self.input() {
            return Err(LayerError::Shape(format!("lstm input width {} != {}", x.cols(), self.input())));
        }
        let mut z = x.matmul(&self.w.value)?;
        z.add_assign(&h.matmul(&self.u.value)?)?;
        z.add_row_assign(self.b.value.as_slice())?;
        let hd = self.hidden;
        let (rows, _) = z.shape();
        let mut c_new = Matrix::zeros(rows, hd);
        let mut h_new = Matrix::zeros(rows, hd);
        for r in 0..rows {
            let zr = z.row_mut(r);
            let c_prev = c.row(r);
            let cn = c_new.row_mut(r);
            for j in 0..hd {
                let i = sigmoid(zr[j]);
                let f = sigmoid(zr[hd + j]);
                let g = zr[2 * hd + j].tanh();
                let o = sigmoid(zr[3 * hd + j]);
                zr[j] = i;
                zr[hd + j] = f;
                zr[2 * hd + j] = g;
                zr[3 * hd + j] = o;
                cn[j] = f * c_prev[j] + i * g;
            }
            let hrow = h_new.row_mut(r);
            let crow = c_new.row(r);
            for j in 0..hd {
                hrow[j] = zr[3 * hd + j] * crow[j].tanh();
            }
        }
        Ok((z, c_new, h_new))
    }

    /// Inference pass: final hidden state only, no cache.
    pub fn infer(&self, seq: &[Matrix]) -> Result<Matrix, LayerError> {
        let batch = seq.first().map_or(0, Matrix::rows);
        let mut h = Matrix::zeros(batch, self.hidden);
        let mut c = Matrix::zeros(batch, self.hidden);
        for x in seq {
            let (_, c_new, h_new) = self.step(x, &h, &c)?;
            h = h_new;
            c = c_new;
        }
        Ok(h)
    }

    /// Training pass. The returned cache is valid only until the next call.
    pub fn forward(&mut self, seq: &[Matrix]) -> Result<(Matrix, LstmCache), LayerError> {
        self.generation += 1;
        let batch = seq.first().map_or(0, Matrix::rows);
        let mut cells = vec![Matrix::zeros(batch, self.hidden)];
        let mut hiddens = vec![Matrix::zeros(batch, self.hidden)];
        let mut gates = Vec::with_capacity(seq.len());
        for x in seq {
            let (g, c_new, h_new) = self.step(x, hiddens.last().unwrap(), cells.last().unwrap())?;
            gates.push(g);
            cells.push(c_new);
            hiddens.push(h_new);
        }
        let h_t = hiddens.last().unwrap().clone();
        Ok((h_t, LstmCache { generation: self.generation, xs: seq.to_vec(), gates, cells, hiddens }))
    }

    /// Backpropagation through time. Accumulates into `w.grad`, `u.grad`,
    /// `b.grad` and returns the gradient for every input step. Gradients are
    /// returned unclipped.
    pub fn backward(&mut self, grad_h_t: &Matrix, cache: LstmCache) -> Result<Vec<Matrix>, LayerError> {
        if cache.generation != self.generation {
            return Err(LayerError::StaleCache("lstm"));
        }
        let hd = self.hidden;
        let steps = cache.xs.len();
        let batch = grad_h_t.rows();
        if grad_h_t.cols() != hd || cache.hiddens[0].rows() != batch {
            return Err(LayerError::Shape(format!("lstm grad_h {:?}", grad_h_t.shape())));
        }
        let mut grad_xs = vec![Matrix::zeros(0, 0); steps];
        let mut dh = grad_h_t.clone();
        let mut dc = Matrix::zeros(batch, hd);
        let mut dz = Matrix::zeros(batch, 4 * hd);
        for t in (0..steps).rev() {
            let gates = &cache.gates[t];
            let c_t = &cache.cells[t + 1];
            let c_prev = &cache.cells[t];
            for r in 0..batch {
                let gr = gates.row(r);
                let dhr = dh.row(r);
                let ctr = c_t.row(r);
                let cpr = c_prev.row(r);
                let dcr = dc.row_mut(r);
                let dzr = dz.row_mut(r);
                for j in 0..hd {
                    let (i, f, g, o) = (gr[j], gr[hd + j], gr[2 * hd + j], gr[3 * hd + j]);
                    let tc = ctr[j].tanh();
                    let d_o = dhr[j] * tc;
                    let d_c = dcr[j] + dhr[j] * o * (1.0 - tc * tc);
                    dzr[j] = d_c * g * i * (1.0 - i);
                    dzr[hd + j] = d_c * cpr[j] * f * (1.0 - f);
                    dzr[2 * hd + j] = d_c * i * (1.0 - g * g);
                    dzr[3 * hd + j] = d_o * o * (1.0 - o);
                    dcr[j] = d_c * f;
                }
            }
            self.w.grad.add_assign(&cache.xs[t].t_matmul(&dz)?)?;
            self.u.grad.add_assign(&cache.hiddens[t].t_matmul(&dz)?)?;
            for (acc, s) in self.b.grad.as_mut_slice().iter_mut().zip(dz.col_sums()) {
                *acc += s;
            }
            grad_xs[t] = dz.matmul_t(&self.w.value)?;
            dh = dz.matmul_t(&self.u.value)?;
        }
        Ok(grad_xs)
    }
}
