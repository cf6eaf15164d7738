//! A fully connected network with ReLU hidden layers and a linear output,
//! evaluated against an external flat parameter vector so that optimizer
//! state can own the parameters.
//!
//! Parameter layout, layer by layer: the `fan_out × fan_in` weight matrix in
//! row-major order, then the `fan_out` biases.

use alloc::vec;
use alloc::vec::Vec;

use crate::optim::{momentum_hamiltonian, OptError, OptState, OptimizerConfig};
use crate::rng::Rng;
use crate::vector::Vector;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum NnError {
    #[error("shape mismatch for {what}: expected {expected}, got {got}")]
    Shape { what: &'static str, expected: usize, got: usize },
    #[error("a network needs at least an input and an output layer, each of nonzero width")]
    Layout,
    #[error("empty batch")]
    EmptyBatch,
    #[error(transparent)]
    Opt(#[from] OptError),
}

/// One dense layer in unflattened form.
#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    pub fan_in: usize,
    pub fan_out: usize,
    /// Row-major, `fan_out` rows of `fan_in`.
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Mlp {
    sizes: Vec<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LossSpec {
    /// `½ Σ_j e_j²` per sample.
    Mse,
    /// `½ e²` for `|e| ≤ δ`, `δ (|e| - ½ δ)` beyond, summed over outputs.
    Huber { delta: f64 },
}

impl LossSpec {
    /// Loss and its derivative with respect to the prediction for one
    /// residual `e = prediction - target`.
    pub fn eval(&self, e: f64) -> (f64, f64) {
        match *self {
            LossSpec::Mse => (0.5 * e * e, e),
            LossSpec::Huber { delta } => {
                if e.abs() <= delta {
                    (0.5 * e * e, e)
                } else {
                    (delta * (e.abs() - 0.5 * delta), delta * e.signum())
                }
            }
        }
    }
}

impl Mlp {
    /// `sizes = [input, hidden..., output]`.
    pub fn new(sizes: &[usize]) -> Result<Self, NnError> {
        if sizes.len() < 2 || sizes.contains(&0) {
            return Err(NnError::Layout);
        }
        Ok(Self { sizes: sizes.to_vec() })
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

    /// `Σ (fan_in + 1) · fan_out`.
    pub fn param_count(&self) -> usize {
        self.sizes.windows(2).map(|w| (w[0] + 1) * w[1]).sum()
    }

    /// He initialization: weights `N(0, 2/fan_in)`, biases zero.
    pub fn init(&self, rng: &mut Rng) -> Vector {
        let mut params = Vec::with_capacity(self.param_count());
        for w in self.sizes.windows(2) {
            let std = libm::sqrt(2.0 / w[0] as f64);
            params.extend(rng.gaussian(w[0] * w[1], 0.0, std).iter());
            params.extend(core::iter::repeat_n(0.0, w[1]));
        }
        params.into()
    }

    pub fn unflatten(&self, params: &[f64]) -> Result<Vec<Layer>, NnError> {
        self.check_params(params)?;
        let mut offset = 0;
        Ok(self
            .sizes
            .windows(2)
            .map(|w| {
                let (fan_in, fan_out) = (w[0], w[1]);
                let weights = params[offset..offset + fan_in * fan_out].to_vec();
                offset += fan_in * fan_out;
                let bias = params[offset..offset + fan_out].to_vec();
                offset += fan_out;
                Layer { fan_in, fan_out, weights, bias }
            })
            .collect())
    }

    pub fn flatten(&self, layers: &[Layer]) -> Result<Vector, NnError> {
        if layers.len() + 1 != self.sizes.len() {
            return Err(NnError::Shape { what: "layer count", expected: self.sizes.len() - 1, got: layers.len() });
        }
        let mut params = Vec::with_capacity(self.param_count());
        for (layer, w) in layers.iter().zip(self.sizes.windows(2)) {
            if layer.weights.len() != w[0] * w[1] || layer.bias.len() != w[1] {
                return Err(NnError::Shape {
                    what: "layer",
                    expected: (w[0] + 1) * w[1],
                    got: layer.weights.len() + layer.bias.len(),
                });
            }
            params.extend_from_slice(&layer.weights);
            params.extend_from_slice(&layer.bias);
        }
        Ok(params.into())
    }

    pub fn forward(&self, params: &[f64], input: &[f64]) -> Result<Vector, NnError> {
        self.check_params(params)?;
        self.check_input(input)?;
        let mut x = input.to_vec();
        let mut offset = 0;
        let last = self.sizes.len() - 2;
        for (l, w) in self.sizes.windows(2).enumerate() {
            let mut out = dense(params, offset, w[0], w[1], &x);
            offset += (w[0] + 1) * w[1];
            if l < last {
                out.iter_mut().for_each(|o| *o = o.max(0.0));
            }
            x = out;
        }
        Ok(x.into())
    }

    /// Mean loss over a batch of `(input, target)` pairs and its gradient
    /// with respect to the flattened parameters.
    pub fn backward(
        &self,
        params: &[f64],
        inputs: &[&[f64]],
        targets: &[&[f64]],
        loss: LossSpec,
    ) -> Result<(f64, Vector), NnError> {
        if inputs.len() != targets.len() {
            return Err(NnError::Shape { what: "targets", expected: inputs.len(), got: targets.len() });
        }
        for t in targets {
            if t.len() != self.output_dim() {
                return Err(NnError::Shape { what: "target", expected: self.output_dim(), got: t.len() });
            }
        }
        self.backward_with(params, inputs, |i, out, d_out| {
            let mut total = 0.0;
            for j in 0..out.len() {
                let (l, d) = loss.eval(out[j] - targets[i][j]);
                total += l;
                d_out[j] = d;
            }
            total
        })
    }

    /// Mean of a per-sample loss and its parameter gradient. `sample_loss`
    /// receives the sample index and the network output, writes the
    /// derivative of the loss with respect to the output into its third
    /// argument and returns the loss.
    pub fn backward_with(
        &self,
        params: &[f64],
        inputs: &[&[f64]],
        mut sample_loss: impl FnMut(usize, &[f64], &mut [f64]) -> f64,
    ) -> Result<(f64, Vector), NnError> {
        self.check_params(params)?;
        if inputs.is_empty() {
            return Err(NnError::EmptyBatch);
        }
        let mut grad = vec![0.0; params.len()];
        let mut total = 0.0;
        let depth = self.sizes.len() - 1;
        let offsets: Vec<usize> = self
            .sizes
            .windows(2)
            .scan(0, |acc, w| {
                let start = *acc;
                *acc += (w[0] + 1) * w[1];
                Some(start)
            })
            .collect();
        let mut d_out = vec![0.0; self.output_dim()];
        for (i, input) in inputs.iter().enumerate() {
            self.check_input(input)?;
            // activations[l] is the input to layer l (post-ReLU)
            let mut activations: Vec<Vec<f64>> = Vec::with_capacity(depth + 1);
            activations.push(input.to_vec());
            for (l, w) in self.sizes.windows(2).enumerate() {
                let mut out = dense(params, offsets[l], w[0], w[1], &activations[l]);
                if l + 1 < depth {
                    out.iter_mut().for_each(|o| *o = o.max(0.0));
                }
                activations.push(out);
            }
            d_out.iter_mut().for_each(|d| *d = 0.0);
            total += sample_loss(i, &activations[depth], &mut d_out);

            let mut delta = d_out.clone();
            for l in (0..depth).rev() {
                let (fan_in, fan_out) = (self.sizes[l], self.sizes[l + 1]);
                let off = offsets[l];
                let x = &activations[l];
                for o in 0..fan_out {
                    let d = delta[o];
                    if d == 0.0 {
                        continue;
                    }
                    let row = &mut grad[off + o * fan_in..off + (o + 1) * fan_in];
                    for (g, xi) in row.iter_mut().zip(x) {
                        *g += d * xi;
                    }
                    grad[off + fan_in * fan_out + o] += d;
                }
                if l == 0 {
                    break;
                }
                let mut prev = vec![0.0; fan_in];
                for o in 0..fan_out {
                    let d = delta[o];
                    if d == 0.0 {
                        continue;
                    }
                    let row = &params[off + o * fan_in..off + (o + 1) * fan_in];
                    for (p, w) in prev.iter_mut().zip(row) {
                        *p += d * w;
                    }
                }
                // ReLU derivative: zero where the activation was clipped.
                for (p, a) in prev.iter_mut().zip(x) {
                    if *a <= 0.0 {
                        *p = 0.0;
                    }
                }
                delta = prev;
            }
        }
        let scale = 1.0 / inputs.len() as f64;
        grad.iter_mut().for_each(|g| *g *= scale);
        Ok((total * scale, grad.into()))
    }

    fn check_params(&self, params: &[f64]) -> Result<(), NnError> {
        if params.len() != self.param_count() {
            return Err(NnError::Shape { what: "parameters", expected: self.param_count(), got: params.len() });
        }
        Ok(())
    }

    fn check_input(&self, input: &[f64]) -> Result<(), NnError> {
        if input.len() != self.input_dim() {
            return Err(NnError::Shape { what: "input", expected: self.input_dim(), got: input.len() });
        }
        Ok(())
    }
}

fn dense(params: &[f64], offset: usize, fan_in: usize, fan_out: usize, x: &[f64]) -> Vec<f64> {
    let bias = &params[offset + fan_in * fan_out..offset + (fan_in + 1) * fan_out];
    (0..fan_out)
        .map(|o| {
            let row = &params[offset + o * fan_in..offset + (o + 1) * fan_in];
            bias[o] + row.iter().zip(x).map(|(w, x)| w * x).sum::<f64>()
        })
        .collect()
}

/// Energy of the optimizer state driving a network's parameters:
/// kinetic energy of the recovered momenta plus `J_value`. See
/// [`momentum_hamiltonian`] for the kinetic form per algorithm.
pub fn network_hamiltonian(net: &Mlp, state: &OptState, cfg: &OptimizerConfig, j_value: f64) -> Result<f64, NnError> {
    if state.dim() != net.param_count() {
        return Err(NnError::Shape { what: "optimizer state", expected: net.param_count(), got: state.dim() });
    }
    Ok(momentum_hamiltonian(cfg, state, j_value)?)
}
