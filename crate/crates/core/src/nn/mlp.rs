//! Fully connected network: tanh on every hidden layer, affine output.
//!
//! Weights are stored `(out, in)`. Batched calls take one sample per row.

use serde::{Deserialize, Serialize};

use crate::dense::{gemm, Matrix, Op, Rng};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mlp {
    sizes: Vec<usize>,
    weights: Vec<Matrix>,
    biases: Vec<Vec<f64>>,
}

/// Per-layer activations recorded by a forward pass.
///
/// `layers[0]` is the input batch and `layers[l]` the output of layer `l`
/// (post-tanh for hidden layers). tanh' is recovered as `1 - h^2`.
#[derive(Debug, Clone)]
pub struct Tape {
    layers: Vec<Matrix>,
}

impl Tape {
    pub fn input(&self) -> &Matrix {
        &self.layers[0]
    }

    pub fn output(&self) -> &Matrix {
        self.layers.last().expect("tape is never empty")
    }
}

/// Gradients shaped like an [`Mlp`]'s parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpGrads {
    pub weights: Vec<Matrix>,
    pub biases: Vec<Vec<f64>>,
}

impl MlpGrads {
    pub fn zeros_like(mlp: &Mlp) -> Self {
        Self {
            weights: mlp
                .weights
                .iter()
                .map(|w| Matrix::zeros(w.rows(), w.cols()))
                .collect(),
            biases: mlp.biases.iter().map(|b| vec![0.0; b.len()]).collect(),
        }
    }

    /// Appends in checkpoint order: per layer, weights then biases.
    pub fn append_flat(&self, out: &mut Vec<f64>) {
        for (w, b) in self.weights.iter().zip(&self.biases) {
            out.extend_from_slice(w.as_slice());
            out.extend_from_slice(b);
        }
    }
}

fn validate_sizes(sizes: &[usize]) -> Result<()> {
    if sizes.len() < 2 {
        return Err(Error::config(format!(
            "an MLP needs at least input and output sizes, got {sizes:?}"
        )));
    }
    if sizes.contains(&0) {
        return Err(Error::config(format!("layer sizes must be >= 1, got {sizes:?}")));
    }
    Ok(())
}

impl Mlp {
    /// Glorot-uniform weights, zero biases.
    pub fn new(sizes: &[usize], rng: &mut Rng) -> Result<Self> {
        validate_sizes(sizes)?;
        let mut weights = Vec::with_capacity(sizes.len() - 1);
        let mut biases = Vec::with_capacity(sizes.len() - 1);
        for pair in sizes.windows(2) {
            let (fan_in, fan_out) = (pair[0], pair[1]);
            weights.push(glorot(fan_out, fan_in, rng));
            biases.push(vec![0.0; fan_out]);
        }
        Ok(Self {
            sizes: sizes.to_vec(),
            weights,
            biases,
        })
    }

    pub fn zeros(sizes: &[usize]) -> Result<Self> {
        validate_sizes(sizes)?;
        Ok(Self {
            sizes: sizes.to_vec(),
            weights: sizes
                .windows(2)
                .map(|p| Matrix::zeros(p[1], p[0]))
                .collect(),
            biases: sizes[1..].iter().map(|&n| vec![0.0; n]).collect(),
        })
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn input_size(&self) -> usize {
        self.sizes[0]
    }

    pub fn output_size(&self) -> usize {
        *self.sizes.last().unwrap()
    }

    pub fn n_layers(&self) -> usize {
        self.weights.len()
    }

    pub fn weights(&self) -> &[Matrix] {
        &self.weights
    }

    pub fn weights_mut(&mut self) -> &mut [Matrix] {
        &mut self.weights
    }

    pub fn biases(&self) -> &[Vec<f64>] {
        &self.biases
    }

    pub fn biases_mut(&mut self) -> &mut [Vec<f64>] {
        &mut self.biases
    }

    /// `sum over layers of (in * out + out)`
    pub fn param_count(&self) -> usize {
        param_count(&self.sizes)
    }

    /// Appends in checkpoint order: per layer, weights then biases.
    pub fn append_flat(&self, out: &mut Vec<f64>) {
        for (w, b) in self.weights.iter().zip(&self.biases) {
            out.extend_from_slice(w.as_slice());
            out.extend_from_slice(b);
        }
    }

    /// Inverse of [`Mlp::append_flat`]; returns the number of values consumed.
    pub fn load_flat(&mut self, src: &[f64]) -> Result<usize> {
        let need = self.param_count();
        if src.len() < need {
            return Err(Error::shape(format!(
                "MLP needs {need} parameters, got {}",
                src.len()
            )));
        }
        let mut at = 0;
        for (w, b) in self.weights.iter_mut().zip(self.biases.iter_mut()) {
            let n = w.as_slice().len();
            w.as_mut_slice().copy_from_slice(&src[at..at + n]);
            at += n;
            let n = b.len();
            b.copy_from_slice(&src[at..at + n]);
            at += n;
        }
        Ok(at)
    }

    /// Single-sample forward pass.
    pub fn forward(&self, x: &[f64]) -> Result<(Vec<f64>, Tape)> {
        let batch = Matrix::from_vec(1, x.len(), x.to_vec())?;
        let (y, tape) = self.forward_batch(&batch)?;
        Ok((y.into_vec(), tape))
    }

    pub fn forward_batch(&self, x: &Matrix) -> Result<(Matrix, Tape)> {
        if x.cols() != self.sizes[0] {
            return Err(Error::shape(format!(
                "layer 0 expects input width {}, got {}",
                self.sizes[0],
                x.cols()
            )));
        }
        let n = self.weights.len();
        let mut layers = Vec::with_capacity(n + 1);
        layers.push(x.clone());
        for (l, (w, b)) in self.weights.iter().zip(&self.biases).enumerate() {
            let prev = &layers[l];
            let mut z = Matrix::zeros(prev.rows(), w.rows());
            gemm(1.0, prev, Op::N, w, Op::T, 0.0, &mut z);
            let hidden = l + 1 < n;
            for r in 0..z.rows() {
                for (zi, bi) in z.row_mut(r).iter_mut().zip(b) {
                    *zi += bi;
                    if hidden {
                        *zi = zi.tanh();
                    }
                }
            }
            layers.push(z);
        }
        let y = layers.last().unwrap().clone();
        Ok((y, Tape { layers }))
    }

    fn check_tape(&self, tape: &Tape, dy_rows: usize, dy_cols: usize) -> Result<()> {
        if tape.layers.len() != self.weights.len() + 1 {
            return Err(Error::shape(format!(
                "tape has {} layers, network has {}",
                tape.layers.len().saturating_sub(1),
                self.weights.len()
            )));
        }
        for (l, a) in tape.layers.iter().enumerate() {
            if a.cols() != self.sizes[l] || a.rows() != dy_rows {
                return Err(Error::shape(format!(
                    "stale tape at layer {l}: {}x{} vs width {} batch {dy_rows}",
                    a.rows(),
                    a.cols(),
                    self.sizes[l]
                )));
            }
        }
        if dy_cols != self.output_size() {
            return Err(Error::shape(format!(
                "adjoint width {dy_cols} does not match output layer {}",
                self.output_size()
            )));
        }
        Ok(())
    }

    /// Single-sample reverse pass. Returns `(dx, dparams)`.
    pub fn backward(&self, tape: &Tape, dy: &[f64]) -> Result<(Vec<f64>, MlpGrads)> {
        let dy = Matrix::from_vec(1, dy.len(), dy.to_vec())?;
        let mut grads = MlpGrads::zeros_like(self);
        let dx = self.backward_batch(tape, &dy, &mut grads)?;
        Ok((dx.into_vec(), grads))
    }

    /// Batched reverse pass. Parameter gradients are accumulated into
    /// `grads`; the input adjoint is returned.
    pub fn backward_batch(&self, tape: &Tape, dy: &Matrix, grads: &mut MlpGrads) -> Result<Matrix> {
        self.check_tape(tape, dy.rows(), dy.cols())?;
        let n = self.weights.len();
        let mut delta = dy.clone();
        for l in (0..n).rev() {
            if l + 1 < n {
                let out = &tape.layers[l + 1];
                for (d, h) in delta.as_mut_slice().iter_mut().zip(out.as_slice()) {
                    *d *= 1.0 - h * h;
                }
            }
            let input = &tape.layers[l];
            gemm(1.0, &delta, Op::T, input, Op::N, 1.0, &mut grads.weights[l]);
            let db = &mut grads.biases[l];
            for r in 0..delta.rows() {
                for (g, d) in db.iter_mut().zip(delta.row(r)) {
                    *g += d;
                }
            }
            let mut prev = Matrix::zeros(delta.rows(), self.sizes[l]);
            gemm(1.0, &delta, Op::N, &self.weights[l], Op::N, 0.0, &mut prev);
            delta = prev;
        }
        Ok(delta)
    }
}

pub fn param_count(sizes: &[usize]) -> usize {
    sizes.windows(2).map(|p| p[0] * p[1] + p[1]).sum()
}

/// `U[-l, l]` with `l = sqrt(6 / (fan_in + fan_out))`.
pub fn glorot(rows: usize, cols: usize, rng: &mut Rng) -> Matrix {
    let limit = (6.0 / (rows + cols) as f64).sqrt();
    Matrix::from_fn(rows, cols, |_, _| rng.uniform(-limit, limit))
}
