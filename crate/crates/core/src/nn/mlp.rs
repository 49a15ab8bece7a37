use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{shape_err, Error, Result};

/// Output-layer activation. Hidden layers always use ReLU.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Tanh,
    Identity,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MlpSpec {
    pub input_dim: usize,
    pub hidden_dims: Vec<usize>,
    pub output_dim: usize,
    pub output_activation: Activation,
}

impl MlpSpec {
    pub fn new(
        input_dim: usize,
        hidden_dims: &[usize],
        output_dim: usize,
        output_activation: Activation,
    ) -> Self {
        Self {
            input_dim,
            hidden_dims: hidden_dims.to_vec(),
            output_dim,
            output_activation,
        }
    }

    fn layer_dims(&self) -> Vec<usize> {
        let mut dims = vec![self.input_dim];
        dims.extend(&self.hidden_dims);
        dims.push(self.output_dim);
        dims
    }
}

/// Row-major batch of samples, one sample per row.
#[derive(Debug, Clone, PartialEq)]
pub struct Batch {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Batch {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(shape_err(
                format!("{rows}x{cols} batch"),
                format!("{} values", data.len()),
            ));
        }
        Ok(Self { rows, cols, data })
    }

    /// Stacks equally sized rows.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let cols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            let r = r.as_ref();
            if r.len() != cols {
                return Err(shape_err(format!("rows of length {cols}"), r.len()));
            }
            data.extend_from_slice(r);
        }
        Ok(Self {
            rows: rows.len(),
            cols,
            data,
        })
    }

    pub fn single(row: &[f64]) -> Self {
        Self {
            rows: 1,
            cols: row.len(),
            data: row.to_vec(),
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    /// Side-by-side concatenation `[self | other]`.
    pub fn hstack(&self, other: &Batch) -> Result<Batch> {
        if self.rows != other.rows {
            return Err(shape_err(format!("{} rows", self.rows), other.rows));
        }
        let mut data = Vec::with_capacity(self.rows * (self.cols + other.cols));
        for r in 0..self.rows {
            data.extend_from_slice(self.row(r));
            data.extend_from_slice(other.row(r));
        }
        Ok(Batch {
            rows: self.rows,
            cols: self.cols + other.cols,
            data,
        })
    }

    /// Columns `start..end` of every row.
    pub fn columns(&self, start: usize, end: usize) -> Batch {
        assert!(
            start <= end && end <= self.cols,
            "column range out of bounds"
        );
        let mut data = Vec::with_capacity(self.rows * (end - start));
        for r in 0..self.rows {
            data.extend_from_slice(&self.row(r)[start..end]);
        }
        Batch {
            rows: self.rows,
            cols: end - start,
            data,
        }
    }
}

/// `c ← a · b` for row-major `a` (m×k, given by strides) and `b` (k×n, given by strides).
#[allow(clippy::too_many_arguments)]
fn gemm(
    m: usize,
    k: usize,
    n: usize,
    a: &[f64],
    (rsa, csa): (usize, usize),
    b: &[f64],
    (rsb, csb): (usize, usize),
    c: &mut [f64],
) {
    if m == 0 || n == 0 {
        return;
    }
    assert!(k == 0 || (m - 1) * rsa + (k - 1) * csa < a.len());
    assert!(k == 0 || (k - 1) * rsb + (n - 1) * csb < b.len());
    assert_eq!(c.len(), m * n);
    // SAFETY: the asserts above keep every strided access of a, b and c in bounds.
    unsafe {
        matrixmultiply::dgemm(
            m,
            k,
            n,
            1.0,
            a.as_ptr(),
            rsa as isize,
            csa as isize,
            b.as_ptr(),
            rsb as isize,
            csb as isize,
            0.0,
            c.as_mut_ptr(),
            n as isize,
            1,
        );
    }
}

/// Fully connected layer `z = W x + b` with `W` stored `outputs × inputs`, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Dense {
    pub inputs: usize,
    pub outputs: usize,
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

impl Dense {
    pub fn zeros(inputs: usize, outputs: usize) -> Self {
        Self {
            inputs,
            outputs,
            weights: vec![0.0; inputs * outputs],
            bias: vec![0.0; outputs],
        }
    }

    fn forward(&self, x: &Batch) -> Batch {
        let mut z = Batch::zeros(x.rows, self.outputs);
        gemm(
            x.rows,
            self.inputs,
            self.outputs,
            &x.data,
            (self.inputs, 1),
            &self.weights,
            (1, self.inputs),
            &mut z.data,
        );
        for row in z.data.chunks_exact_mut(self.outputs) {
            for (v, b) in row.iter_mut().zip(&self.bias) {
                *v += b;
            }
        }
        z
    }
}

/// Multi-layer perceptron parameters. Gradients and optimizer moments reuse this type.
#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    pub layers: Vec<Dense>,
    pub output_activation: Activation,
}

/// Activations recorded by [`Mlp::forward`] for the matching backward pass.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    /// Input of every layer (the network input first).
    inputs: Vec<Batch>,
    /// Pre-activation of every layer.
    pre: Vec<Batch>,
    output: Batch,
}

impl ForwardCache {
    pub fn output(&self) -> &Batch {
        &self.output
    }
}

impl Mlp {
    /// Weights ~ U(−1/√fan_in, 1/√fan_in), biases zero.
    pub fn init<R: Rng + ?Sized>(spec: &MlpSpec, rng: &mut R) -> Result<Self> {
        let dims = spec.layer_dims();
        if dims.iter().any(|&d| d == 0) {
            return Err(Error::Config(format!(
                "all layer widths must be >= 1, got {dims:?}"
            )));
        }
        let layers = dims
            .windows(2)
            .map(|w| {
                let mut layer = Dense::zeros(w[0], w[1]);
                let bound = 1.0 / (w[0] as f64).sqrt();
                for v in &mut layer.weights {
                    *v = rng.gen_range(-bound..bound);
                }
                layer
            })
            .collect();
        Ok(Self {
            layers,
            output_activation: spec.output_activation,
        })
    }

    /// Same shapes, all parameters zero.
    pub fn zeros_like(&self) -> Self {
        Self {
            layers: self
                .layers
                .iter()
                .map(|l| Dense::zeros(l.inputs, l.outputs))
                .collect(),
            output_activation: self.output_activation,
        }
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].inputs
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().expect("at least one layer").outputs
    }

    pub fn spec(&self) -> MlpSpec {
        MlpSpec {
            input_dim: self.input_dim(),
            hidden_dims: self.layers[..self.layers.len() - 1]
                .iter()
                .map(|l| l.outputs)
                .collect(),
            output_dim: self.output_dim(),
            output_activation: self.output_activation,
        }
    }

    pub fn same_shape(&self, other: &Mlp) -> bool {
        self.layers.len() == other.layers.len()
            && self
                .layers
                .iter()
                .zip(&other.layers)
                .all(|(a, b)| a.inputs == b.inputs && a.outputs == b.outputs)
    }

    pub fn num_params(&self) -> usize {
        self.layers
            .iter()
            .map(|l| l.weights.len() + l.bias.len())
            .sum()
    }

    /// Parameter tensors in a fixed order: weights then bias of each layer.
    pub fn tensors(&self) -> impl Iterator<Item = &[f64]> {
        self.layers
            .iter()
            .flat_map(|l| [l.weights.as_slice(), l.bias.as_slice()])
    }

    pub fn tensors_mut(&mut self) -> impl Iterator<Item = &mut Vec<f64>> {
        self.layers
            .iter_mut()
            .flat_map(|l| [&mut l.weights, &mut l.bias])
    }

    pub fn params(&self) -> impl Iterator<Item = f64> + '_ {
        self.tensors().flat_map(|t| t.iter().copied())
    }

    pub fn params_mut(&mut self) -> impl Iterator<Item = &mut f64> {
        self.tensors_mut().flat_map(|t| t.iter_mut())
    }

    pub fn forward(&self, x: &Batch) -> Result<(Batch, ForwardCache)> {
        if x.cols != self.input_dim() {
            return Err(shape_err(
                format!("input width {}", self.input_dim()),
                x.cols,
            ));
        }
        let last = self.layers.len() - 1;
        let mut inputs = Vec::with_capacity(self.layers.len());
        let mut pre = Vec::with_capacity(self.layers.len());
        let mut a = x.clone();
        for (i, layer) in self.layers.iter().enumerate() {
            let z = layer.forward(&a);
            let mut next = z.clone();
            if i < last {
                next.data.iter_mut().for_each(|v| *v = v.max(0.0));
            } else if self.output_activation == Activation::Tanh {
                next.data.iter_mut().for_each(|v| *v = v.tanh());
            }
            inputs.push(a);
            pre.push(z);
            a = next;
        }
        let cache = ForwardCache {
            inputs,
            pre,
            output: a.clone(),
        };
        Ok((a, cache))
    }

    /// Convenience single-sample forward pass.
    pub fn predict(&self, x: &[f64]) -> Result<Vec<f64>> {
        Ok(self.forward(&Batch::single(x))?.0.data)
    }

    /// Gradients of the scalar loss whose derivative w.r.t. the outputs is `dl_dy`,
    /// summed over the batch. Returns `(parameter gradients, dL/dx)`.
    pub fn backward(&self, cache: &ForwardCache, dl_dy: &Batch) -> Result<(Mlp, Batch)> {
        let out = &cache.output;
        if dl_dy.rows != out.rows || dl_dy.cols != out.cols {
            return Err(shape_err(
                format!("{}x{} output gradient", out.rows, out.cols),
                format!("{}x{}", dl_dy.rows, dl_dy.cols),
            ));
        }
        let mut grads = self.zeros_like();
        let mut delta = dl_dy.clone();
        if self.output_activation == Activation::Tanh {
            for (d, y) in delta.data.iter_mut().zip(&out.data) {
                *d *= 1.0 - y * y;
            }
        }
        for i in (0..self.layers.len()).rev() {
            let layer = &self.layers[i];
            let input = &cache.inputs[i];
            let g = &mut grads.layers[i];
            let rows = delta.rows;
            // dW = δᵀ X
            gemm(
                layer.outputs,
                rows,
                layer.inputs,
                &delta.data,
                (1, layer.outputs),
                &input.data,
                (layer.inputs, 1),
                &mut g.weights,
            );
            for row in delta.data.chunks_exact(layer.outputs) {
                for (b, d) in g.bias.iter_mut().zip(row) {
                    *b += d;
                }
            }
            // dX = δ W
            let mut dx = Batch::zeros(rows, layer.inputs);
            gemm(
                rows,
                layer.outputs,
                layer.inputs,
                &delta.data,
                (layer.outputs, 1),
                &layer.weights,
                (layer.inputs, 1),
                &mut dx.data,
            );
            if i > 0 {
                for (d, z) in dx.data.iter_mut().zip(&cache.pre[i - 1].data) {
                    if *z <= 0.0 {
                        *d = 0.0;
                    }
                }
            }
            delta = dx;
        }
        Ok((grads, delta))
    }
}

/// `target ← τ·main + (1−τ)·target`, elementwise.
pub fn soft_update(target: &mut Mlp, main: &Mlp, tau: f64) -> Result<()> {
    if !target.same_shape(main) {
        return Err(shape_err(
            format!("{:?}", main.spec()),
            format!("{:?}", target.spec()),
        ));
    }
    for (t, m) in target.params_mut().zip(main.params()) {
        *t = tau * m + (1.0 - tau) * *t;
    }
    Ok(())
}
