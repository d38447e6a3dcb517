//! Dense networks with exact reverse-mode gradients.
//!
//! Everything is f64 and allocation-light: parameters live in one flat
//! vector (weights stored output-major so both operands of every dot product
//! are contiguous), and the batched paths are written as plain loops that
//! the compiler autovectorizes. Gradients are exact, which the test suite
//! verifies against central finite differences.

use rand::Rng as _;

use crate::error::{Error, Result};
use crate::rng::Rng;

/// Row-major matrix of f64 used for batched activations.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let r = rows.len();
        if r == 0 {
            return Err(Error::Dimension {
                what: "matrix rows",
                expected: 1,
                got: 0,
            });
        }
        let c = rows[0].len();
        let mut data = Vec::with_capacity(r * c);
        for row in &rows {
            if row.len() != c {
                return Err(Error::Dimension {
                    what: "matrix row width",
                    expected: c,
                    got: row.len(),
                });
            }
            data.extend_from_slice(row);
        }
        Ok(Matrix { rows: r, cols: c, data })
    }

    #[inline]
    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, r: usize) -> &mut [f64] {
        &mut self.data[r * self.cols..(r + 1) * self.cols]
    }
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc0 = 0.0;
    let mut acc1 = 0.0;
    let mut acc2 = 0.0;
    let mut acc3 = 0.0;
    let chunks = a.len() / 4;
    for i in 0..chunks {
        let j = i * 4;
        acc0 += a[j] * b[j];
        acc1 += a[j + 1] * b[j + 1];
        acc2 += a[j + 2] * b[j + 2];
        acc3 += a[j + 3] * b[j + 3];
    }
    let mut acc = (acc0 + acc1) + (acc2 + acc3);
    for j in chunks * 4..a.len() {
        acc += a[j] * b[j];
    }
    acc
}

#[inline]
fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    debug_assert_eq!(x.len(), y.len());
    for (yi, xi) in y.iter_mut().zip(x.iter()) {
        *yi += alpha * *xi;
    }
}

/// Per-layer parameter offsets inside the flat vector.
#[derive(Debug, Clone, Copy)]
struct LayerSpec {
    w_off: usize,
    b_off: usize,
    fan_in: usize,
    fan_out: usize,
}

/// Fully connected network: ReLU hidden layers, linear output.
#[derive(Debug, Clone)]
pub struct Mlp {
    sizes: Vec<usize>,
    layers: Vec<LayerSpec>,
    params: Vec<f64>,
}

/// Activations saved by a batched forward pass for the backward pass.
pub struct ForwardCache {
    /// Input batch plus every post-activation layer output.
    acts: Vec<Matrix>,
}

impl ForwardCache {
    /// Network output (last layer activations).
    pub fn output(&self) -> &Matrix {
        self.acts.last().expect("cache holds at least the input")
    }
}

impl Mlp {
    /// Build a network with the given layer sizes (at least input and
    /// output). Weights and biases start uniform in +-1/sqrt(fan_in).
    pub fn new(sizes: &[usize], rng: &mut Rng) -> Result<Self> {
        let mut net = Self::zeros(sizes)?;
        for l in 0..net.layers.len() {
            let spec = net.layers[l];
            let bound = 1.0 / (spec.fan_in as f64).sqrt();
            for i in 0..spec.fan_in * spec.fan_out + spec.fan_out {
                net.params[spec.w_off + i] = rng.gen_range(-bound..bound);
            }
        }
        Ok(net)
    }

    /// Rebuild a network from persisted parameters.
    pub fn from_params(sizes: &[usize], params: Vec<f64>) -> Result<Self> {
        let mut net = Self::zeros(sizes)?;
        if params.len() != net.params.len() {
            return Err(Error::Dimension {
                what: "network parameter vector",
                expected: net.params.len(),
                got: params.len(),
            });
        }
        if params.iter().any(|p| !p.is_finite()) {
            return Err(Error::numeric("non-finite network parameters"));
        }
        net.params = params;
        Ok(net)
    }

    pub fn zeros(sizes: &[usize]) -> Result<Self> {
        if sizes.len() < 2 || sizes.iter().any(|&s| s == 0) {
            return Err(Error::config(format!("invalid layer sizes {sizes:?}")));
        }
        let mut layers = Vec::with_capacity(sizes.len() - 1);
        let mut off = 0;
        for w in sizes.windows(2) {
            let (fan_in, fan_out) = (w[0], w[1]);
            layers.push(LayerSpec {
                w_off: off,
                b_off: off + fan_in * fan_out,
                fan_in,
                fan_out,
            });
            off += fan_in * fan_out + fan_out;
        }
        Ok(Mlp {
            sizes: sizes.to_vec(),
            layers,
            params: vec![0.0; off],
        })
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn input_dim(&self) -> usize {
        self.sizes[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.sizes.last().unwrap()
    }

    pub fn n_params(&self) -> usize {
        self.params.len()
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    /// Single-input forward pass with input validation.
    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.input_dim() {
            return Err(Error::Dimension {
                what: "network input",
                expected: self.input_dim(),
                got: x.len(),
            });
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::numeric("network input contains non-finite values"));
        }
        let mut cur = x.to_vec();
        let last = self.layers.len() - 1;
        for (l, spec) in self.layers.iter().enumerate() {
            let mut next = vec![0.0; spec.fan_out];
            for o in 0..spec.fan_out {
                let wrow = &self.params[spec.w_off + o * spec.fan_in..spec.w_off + (o + 1) * spec.fan_in];
                let z = dot(wrow, &cur) + self.params[spec.b_off + o];
                next[o] = if l < last { z.max(0.0) } else { z };
            }
            cur = next;
        }
        Ok(cur)
    }

    /// Batched forward pass; returns the cache needed for backprop.
    pub fn forward_batch(&self, x: &Matrix) -> Result<ForwardCache> {
        if x.cols != self.input_dim() {
            return Err(Error::Dimension {
                what: "network input batch",
                expected: self.input_dim(),
                got: x.cols,
            });
        }
        let mut acts: Vec<Matrix> = Vec::with_capacity(self.layers.len() + 1);
        acts.push(x.clone());
        let last = self.layers.len() - 1;
        for (l, spec) in self.layers.iter().enumerate() {
            let prev = &acts[l];
            let mut out = Matrix::zeros(x.rows, spec.fan_out);
            for b in 0..x.rows {
                let xin = prev.row(b);
                let orow = out.row_mut(b);
                for o in 0..spec.fan_out {
                    let wrow =
                        &self.params[spec.w_off + o * spec.fan_in..spec.w_off + (o + 1) * spec.fan_in];
                    let z = dot(wrow, xin) + self.params[spec.b_off + o];
                    orow[o] = if l < last { z.max(0.0) } else { z };
                }
            }
            acts.push(out);
        }
        Ok(ForwardCache { acts })
    }

    /// Accumulate parameter gradients for the batch into `grads` (same
    /// length/layout as `params`), given the loss gradient w.r.t. the
    /// network output. `grads` is overwritten.
    pub fn backward_batch(&self, cache: &ForwardCache, d_out: &Matrix, grads: &mut [f64]) {
        assert_eq!(grads.len(), self.params.len());
        assert_eq!(d_out.cols, self.output_dim());
        assert_eq!(d_out.rows, cache.acts[0].rows);
        grads.fill(0.0);

        let mut delta = d_out.clone();
        for l in (0..self.layers.len()).rev() {
            let spec = self.layers[l];
            let a_in = &cache.acts[l];
            // dW[o] += sum_b delta[b][o] * a_in[b]; db[o] += sum_b delta[b][o].
            for b in 0..delta.rows {
                let drow = delta.row(b);
                let xrow = a_in.row(b);
                for o in 0..spec.fan_out {
                    let d = drow[o];
                    if d != 0.0 {
                        let wg = &mut grads[spec.w_off + o * spec.fan_in..spec.w_off + (o + 1) * spec.fan_in];
                        axpy(d, xrow, wg);
                        grads[spec.b_off + o] += d;
                    }
                }
            }
            if l == 0 {
                break;
            }
            // delta_prev[b] = (delta[b] . W) masked by the ReLU derivative.
            let mut prev = Matrix::zeros(delta.rows, spec.fan_in);
            for b in 0..delta.rows {
                let drow = delta.row(b);
                let prow = prev.row_mut(b);
                for o in 0..spec.fan_out {
                    let d = drow[o];
                    if d != 0.0 {
                        let wrow =
                            &self.params[spec.w_off + o * spec.fan_in..spec.w_off + (o + 1) * spec.fan_in];
                        axpy(d, wrow, prow);
                    }
                }
                let arow = cache.acts[l].row(b);
                for (p, a) in prow.iter_mut().zip(arow.iter()) {
                    if *a <= 0.0 {
                        *p = 0.0;
                    }
                }
            }
            delta = prev;
        }
    }

    /// Gradient of the loss w.r.t. the network *input* only (parameters
    /// untouched), given the loss gradient w.r.t. the output.
    pub fn backward_input_batch(&self, cache: &ForwardCache, d_out: &Matrix) -> Matrix {
        assert_eq!(d_out.cols, self.output_dim());
        let mut delta = d_out.clone();
        for l in (0..self.layers.len()).rev() {
            let spec = self.layers[l];
            let mut prev = Matrix::zeros(delta.rows, spec.fan_in);
            for b in 0..delta.rows {
                let drow = delta.row(b);
                let prow = prev.row_mut(b);
                for o in 0..spec.fan_out {
                    let d = drow[o];
                    if d != 0.0 {
                        let wrow =
                            &self.params[spec.w_off + o * spec.fan_in..spec.w_off + (o + 1) * spec.fan_in];
                        axpy(d, wrow, prow);
                    }
                }
                if l > 0 {
                    let arow = cache.acts[l].row(b);
                    for (p, a) in prow.iter_mut().zip(arow.iter()) {
                        if *a <= 0.0 {
                            *p = 0.0;
                        }
                    }
                }
            }
            delta = prev;
        }
        delta
    }

    /// In-place Polyak update: `self = tau * source + (1 - tau) * self`.
    pub fn polyak_from(&mut self, source: &Mlp, tau: f64) {
        debug_assert_eq!(self.params.len(), source.params.len());
        for (t, s) in self.params.iter_mut().zip(source.params.iter()) {
            *t = tau * *s + (1.0 - tau) * *t;
        }
    }
}
