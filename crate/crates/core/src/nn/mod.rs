//! Minimal feed-forward kernel with analytic backpropagation.
//!
//! A [`Branch`] is a chain of [`LinearLayer`]s. In train mode each layer's input goes
//! through inverted dropout first; every layer except the last is followed by a ReLU,
//! so the final output (the embedding) may have negative coordinates. A [`Tape`]
//! records what one train-mode forward pass needs for the matching backward pass.

mod adam;
mod cosine;

pub use adam::{adam_step, AdamState, ADAM_BETA1, ADAM_BETA2, ADAM_EPSILON};
pub use cosine::{cosine, cosine_backward, COSINE_EPS};

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scalar::{axpy, dot, Scalar};

#[derive(Debug, Error, PartialEq)]
pub enum NnError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("tape does not match this branch: {0}")]
    StaleTape(String),
    #[error("non-finite gradient in parameter {param}")]
    NonFinite { param: String },
    #[error("invalid layer configuration: {0}")]
    InvalidShape(String),
}

pub type Result<T> = std::result::Result<T, NnError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Train,
    Eval,
}

fn check_dim(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(NnError::DimensionMismatch { expected, got })
    }
}

/// Fully connected layer `y = x W + b`, with `W` stored row-major as `d_in x d_out`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearLayer<T> {
    d_in: usize,
    d_out: usize,
    pub weights: Vec<T>,
    pub bias: Vec<T>,
}

impl<T: Scalar> LinearLayer<T> {
    pub fn zeros(d_in: usize, d_out: usize) -> Self {
        LinearLayer {
            d_in,
            d_out,
            weights: vec![T::zero(); d_in * d_out],
            bias: vec![T::zero(); d_out],
        }
    }

    /// Glorot-uniform weights in `±sqrt(6 / (d_in + d_out))`, zero bias.
    pub fn glorot<R: Rng + ?Sized>(d_in: usize, d_out: usize, rng: &mut R) -> Self {
        let bound = (6.0 / (d_in + d_out) as f64).sqrt();
        let weights = (0..d_in * d_out)
            .map(|_| T::of(rng.gen_range(-bound..=bound)))
            .collect();
        LinearLayer {
            d_in,
            d_out,
            weights,
            bias: vec![T::zero(); d_out],
        }
    }

    pub fn from_parts(d_in: usize, d_out: usize, weights: Vec<T>, bias: Vec<T>) -> Result<Self> {
        check_dim(d_in * d_out, weights.len())?;
        check_dim(d_out, bias.len())?;
        Ok(LinearLayer {
            d_in,
            d_out,
            weights,
            bias,
        })
    }

    pub fn d_in(&self) -> usize {
        self.d_in
    }

    pub fn d_out(&self) -> usize {
        self.d_out
    }

    /// Row `r` of the weight matrix, i.e. the outgoing weights of input unit `r`.
    #[inline]
    pub fn row(&self, r: usize) -> &[T] {
        &self.weights[r * self.d_out..(r + 1) * self.d_out]
    }

    pub fn forward(&self, x: &[T]) -> Result<Vec<T>> {
        check_dim(self.d_in, x.len())?;
        let mut y = self.bias.clone();
        for (r, &xr) in x.iter().enumerate() {
            if xr != T::zero() {
                axpy(xr, self.row(r), &mut y);
            }
        }
        Ok(y)
    }

    /// Forward pass for a binary sparse input given by its nonzero positions: the bias
    /// plus the sum of the selected weight rows.
    pub fn forward_sparse(&self, indices: &[usize]) -> Result<Vec<T>> {
        let mut y = self.bias.clone();
        for &r in indices {
            if r >= self.d_in {
                return Err(NnError::DimensionMismatch {
                    expected: self.d_in,
                    got: r + 1,
                });
            }
            axpy(T::one(), self.row(r), &mut y);
        }
        Ok(y)
    }

    /// Accumulates parameter gradients for input `x` and returns the input gradient.
    pub fn backward(&self, x: &[T], grad_out: &[T], grads: &mut LinearGrads<T>) -> Result<Vec<T>> {
        check_dim(self.d_in, x.len())?;
        check_dim(self.d_out, grad_out.len())?;
        axpy(T::one(), grad_out, &mut grads.bias);
        let mut grad_in = vec![T::zero(); self.d_in];
        for r in 0..self.d_in {
            if x[r] != T::zero() {
                let d = self.d_out;
                axpy(x[r], grad_out, &mut grads.weights[r * d..(r + 1) * d]);
            }
            grad_in[r] = dot(self.row(r), grad_out);
        }
        Ok(grad_in)
    }

    /// Parameter gradients for a binary sparse input; no input gradient is produced.
    pub fn backward_sparse(&self, indices: &[usize], grad_out: &[T], grads: &mut LinearGrads<T>) -> Result<()> {
        check_dim(self.d_out, grad_out.len())?;
        axpy(T::one(), grad_out, &mut grads.bias);
        let d = self.d_out;
        for &r in indices {
            if r >= self.d_in {
                return Err(NnError::DimensionMismatch {
                    expected: self.d_in,
                    got: r + 1,
                });
            }
            axpy(T::one(), grad_out, &mut grads.weights[r * d..(r + 1) * d]);
        }
        Ok(())
    }

    pub fn num_parameters(&self) -> usize {
        self.weights.len() + self.bias.len()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearGrads<T> {
    pub weights: Vec<T>,
    pub bias: Vec<T>,
}

impl<T: Scalar> LinearGrads<T> {
    pub fn zeros_like(layer: &LinearLayer<T>) -> Self {
        LinearGrads {
            weights: vec![T::zero(); layer.weights.len()],
            bias: vec![T::zero(); layer.bias.len()],
        }
    }

    pub fn zero(&mut self) {
        self.weights.iter_mut().for_each(|w| *w = T::zero());
        self.bias.iter_mut().for_each(|b| *b = T::zero());
    }
}

#[derive(Debug, Clone, PartialEq)]
struct LayerRecord<T> {
    /// Layer input after dropout.
    input: Vec<T>,
    /// Inverted-dropout multipliers (0 or 1/(1-rate)); `None` when dropout was off.
    mask: Option<Vec<T>>,
    pre_activation: Vec<T>,
}

/// Forward activations and dropout masks of one train-mode pass through a branch.
#[derive(Debug, Clone, PartialEq)]
pub struct Tape<T> {
    records: Vec<LayerRecord<T>>,
    input_dim: usize,
}

impl<T> Default for Tape<T> {
    fn default() -> Self {
        Tape {
            records: Vec::new(),
            input_dim: 0,
        }
    }
}

impl<T> Tape<T> {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn clear(&mut self) {
        self.records.clear();
        self.input_dim = 0;
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }
}

/// A stack of linear layers with ReLU between them and dropout on every layer input.
#[derive(Debug, Clone, PartialEq)]
pub struct Branch<T> {
    layers: Vec<LinearLayer<T>>,
    dropout: f64,
}

impl<T: Scalar> Branch<T> {
    pub fn new(layers: Vec<LinearLayer<T>>, dropout: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&dropout) {
            return Err(NnError::InvalidShape(format!("dropout rate {dropout} not in [0, 1)")));
        }
        for pair in layers.windows(2) {
            if pair[0].d_out() != pair[1].d_in() {
                return Err(NnError::InvalidShape(format!(
                    "layer output {} does not feed layer input {}",
                    pair[0].d_out(),
                    pair[1].d_in()
                )));
            }
        }
        Ok(Branch { layers, dropout })
    }

    /// Glorot-initialized branch through `sizes[0] -> sizes[1] -> ... -> sizes[L-1]`.
    /// A single size yields an empty (identity) branch.
    pub fn glorot<R: Rng + ?Sized>(sizes: &[usize], dropout: f64, rng: &mut R) -> Result<Self> {
        if sizes.is_empty() || sizes.contains(&0) {
            return Err(NnError::InvalidShape(format!("bad layer sizes {sizes:?}")));
        }
        let layers = sizes.windows(2).map(|w| LinearLayer::glorot(w[0], w[1], rng)).collect();
        Branch::new(layers, dropout)
    }

    pub fn layers(&self) -> &[LinearLayer<T>] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [LinearLayer<T>] {
        &mut self.layers
    }

    pub fn dropout(&self) -> f64 {
        self.dropout
    }

    pub fn input_dim(&self) -> Option<usize> {
        self.layers.first().map(LinearLayer::d_in)
    }

    pub fn output_dim(&self) -> Option<usize> {
        self.layers.last().map(LinearLayer::d_out)
    }

    /// Runs the branch. In train mode the tape is overwritten with this pass; in eval
    /// mode dropout is the identity and the tape is cleared.
    pub fn forward<R: Rng + ?Sized>(&self, x: &[T], mode: Mode, rng: &mut R, tape: &mut Tape<T>) -> Result<Vec<T>> {
        tape.clear();
        if let Some(d) = self.input_dim() {
            check_dim(d, x.len())?;
        }
        let record = mode == Mode::Train;
        tape.input_dim = x.len();
        let keep = 1.0 - self.dropout;
        let scale = T::of(1.0 / keep);
        let last = self.layers.len().saturating_sub(1);
        let mut h = x.to_vec();
        for (l, layer) in self.layers.iter().enumerate() {
            let mask = if record && self.dropout > 0.0 {
                let m: Vec<T> = (0..h.len())
                    .map(|_| if rng.gen::<f64>() < keep { scale } else { T::zero() })
                    .collect();
                for (hi, &mi) in h.iter_mut().zip(&m) {
                    *hi *= mi;
                }
                Some(m)
            } else {
                None
            };
            let pre = layer.forward(&h)?;
            let out = if l < last {
                pre.iter().map(|&v| v.max(T::zero())).collect()
            } else {
                pre.clone()
            };
            if record {
                tape.records.push(LayerRecord {
                    input: std::mem::take(&mut h),
                    mask,
                    pre_activation: pre,
                });
            }
            h = out;
        }
        Ok(h)
    }

    /// Backpropagates `grad_out` through the pass recorded in `tape`, adding parameter
    /// gradients into `grads` and returning the gradient with respect to the input.
    pub fn backward(&self, tape: &Tape<T>, grad_out: &[T], grads: &mut BranchGrads<T>) -> Result<Vec<T>> {
        if tape.records.len() != self.layers.len() {
            return Err(NnError::StaleTape(format!(
                "tape holds {} layers, branch has {}",
                tape.records.len(),
                self.layers.len()
            )));
        }
        if grads.layers.len() != self.layers.len() {
            return Err(NnError::InvalidShape("gradient buffer does not match branch".into()));
        }
        if self.layers.is_empty() {
            check_dim(tape.input_dim, grad_out.len())?;
            return Ok(grad_out.to_vec());
        }
        check_dim(self.output_dim().unwrap_or(0), grad_out.len())?;
        let last = self.layers.len() - 1;
        let mut g = grad_out.to_vec();
        for l in (0..self.layers.len()).rev() {
            let rec = &tape.records[l];
            let layer = &self.layers[l];
            if rec.input.len() != layer.d_in() || rec.pre_activation.len() != layer.d_out() {
                return Err(NnError::StaleTape(format!("layer {l} shape changed since forward")));
            }
            if l < last {
                for (gi, &p) in g.iter_mut().zip(&rec.pre_activation) {
                    if p <= T::zero() {
                        *gi = T::zero();
                    }
                }
            }
            let mut gin = layer.backward(&rec.input, &g, &mut grads.layers[l])?;
            if let Some(mask) = &rec.mask {
                for (gi, &m) in gin.iter_mut().zip(mask) {
                    *gi *= m;
                }
            }
            g = gin;
        }
        Ok(g)
    }

    pub fn num_parameters(&self) -> usize {
        self.layers.iter().map(LinearLayer::num_parameters).sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BranchGrads<T> {
    pub layers: Vec<LinearGrads<T>>,
}

impl<T: Scalar> BranchGrads<T> {
    pub fn zeros_like(branch: &Branch<T>) -> Self {
        BranchGrads {
            layers: branch.layers().iter().map(LinearGrads::zeros_like).collect(),
        }
    }

    pub fn zero(&mut self) {
        self.layers.iter_mut().for_each(LinearGrads::zero);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn rng() -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(3)
    }

    fn identity(d: usize) -> LinearLayer<f64> {
        let mut l = LinearLayer::zeros(d, d);
        for i in 0..d {
            l.weights[i * d + i] = 1.0;
        }
        l
    }

    #[test]
    fn identity_layer_single() {
        // single layer: no ReLU after the last layer
        let b = Branch::new(vec![identity(2)], 0.0).unwrap();
        let y = b.forward(&[1.0, -2.0], Mode::Eval, &mut rng(), &mut Tape::new()).unwrap();
        assert_eq!(y, vec![1.0, -2.0]);
        // two identity layers: the ReLU between them clips the negative coordinate
        let b = Branch::new(vec![identity(2), identity(2)], 0.0).unwrap();
        let y = b.forward(&[1.0, -2.0], Mode::Eval, &mut rng(), &mut Tape::new()).unwrap();
        assert_eq!(y, vec![1.0, 0.0]);
    }

    #[test]
    fn zero_branch_gives_zero() {
        let b = Branch::new(vec![LinearLayer::<f64>::zeros(3, 4), LinearLayer::zeros(4, 2)], 0.0).unwrap();
        let y = b.forward(&[5.0, -1.0, 2.0], Mode::Eval, &mut rng(), &mut Tape::new()).unwrap();
        assert_eq!(y, vec![0.0, 0.0]);
    }

    #[test]
    fn dimension_mismatch() {
        let b = Branch::new(vec![identity(2)], 0.0).unwrap();
        assert_eq!(
            b.forward(&[1.0], Mode::Eval, &mut rng(), &mut Tape::new()),
            Err(NnError::DimensionMismatch { expected: 2, got: 1 })
        );
        assert!(Branch::new(vec![identity(2), identity(3)], 0.0).is_err());
        assert!(Branch::new(vec![identity(2)], 1.0).is_err());
    }

    #[test]
    fn linear_backward_is_outer_product() {
        let mut r = rng();
        let layer = LinearLayer::<f64>::glorot(3, 2, &mut r);
        let b = Branch::new(vec![layer], 0.0).unwrap();
        let x = [0.5, -1.0, 2.0];
        let g = [0.3, -0.7];
        let mut tape = Tape::new();
        b.forward(&x, Mode::Train, &mut r, &mut tape).unwrap();
        let mut grads = BranchGrads::zeros_like(&b);
        let gin = b.backward(&tape, &g, &mut grads).unwrap();
        for i in 0..3 {
            for o in 0..2 {
                assert_eq!(grads.layers[0].weights[i * 2 + o], x[i] * g[o]);
            }
        }
        assert_eq!(grads.layers[0].bias, g.to_vec());
        let w = &b.layers()[0];
        for i in 0..3 {
            assert!((gin[i] - (w.row(i)[0] * g[0] + w.row(i)[1] * g[1])).abs() < 1e-15);
        }
    }

    #[test]
    fn zero_grad_out_gives_zero_grads() {
        let mut r = rng();
        let b = Branch::<f64>::glorot(&[4, 3, 2], 0.5, &mut r).unwrap();
        let mut tape = Tape::new();
        b.forward(&[1.0, 2.0, 3.0, 4.0], Mode::Train, &mut r, &mut tape).unwrap();
        let mut grads = BranchGrads::zeros_like(&b);
        let gin = b.backward(&tape, &[0.0, 0.0], &mut grads).unwrap();
        assert!(gin.iter().all(|&v| v == 0.0));
        assert_eq!(grads, BranchGrads::zeros_like(&b));
    }

    #[test]
    fn eval_mode_leaves_no_tape() {
        let mut r = rng();
        let b = Branch::<f64>::glorot(&[4, 3, 2], 0.5, &mut r).unwrap();
        let mut tape = Tape::new();
        b.forward(&[1.0, 2.0, 3.0, 4.0], Mode::Eval, &mut r, &mut tape).unwrap();
        let mut grads = BranchGrads::zeros_like(&b);
        assert!(matches!(
            b.backward(&tape, &[1.0, 1.0], &mut grads),
            Err(NnError::StaleTape(_))
        ));
    }

    #[test]
    fn tape_from_other_branch_is_stale() {
        let mut r = rng();
        let a = Branch::<f64>::glorot(&[4, 3, 2], 0.0, &mut r).unwrap();
        let b = Branch::<f64>::glorot(&[4, 2], 0.0, &mut r).unwrap();
        let mut tape = Tape::new();
        a.forward(&[1.0; 4], Mode::Train, &mut r, &mut tape).unwrap();
        let mut grads = BranchGrads::zeros_like(&b);
        assert!(b.backward(&tape, &[1.0, 1.0], &mut grads).is_err());
    }

    #[test]
    fn sparse_forward_matches_dense() {
        let mut r = rng();
        let l = LinearLayer::<f64>::glorot(6, 3, &mut r);
        let dense = l.forward(&[0.0, 1.0, 0.0, 0.0, 1.0, 0.0]).unwrap();
        let sparse = l.forward_sparse(&[1, 4]).unwrap();
        for (a, b) in dense.iter().zip(&sparse) {
            assert!((a - b).abs() < 1e-15);
        }
        assert!(l.forward_sparse(&[6]).is_err());
    }

    #[test]
    fn glorot_bounds() {
        let l = LinearLayer::<f64>::glorot(10, 20, &mut rng());
        let bound = (6.0f64 / 30.0).sqrt();
        assert!(l.weights.iter().all(|w| w.abs() <= bound));
        assert!(l.bias.iter().all(|&b| b == 0.0));
    }
}
