//! Dense feed-forward networks with exact backpropagation, cross-entropy and
//! Adam.
//!
//! Each neuron computes `f(w . z_in + b)`. Parameters are exposed as one flat
//! vector per network, laid out layer by layer as the row-major weight matrix
//! (`outputs x inputs`) followed by the bias vector. Gradients use the same
//! layout.

use alloc::vec;
use alloc::vec::Vec;
use core::sync::atomic::{AtomicU64, Ordering};

use rand_core::RngCore;

use crate::rng::uniform_range;
use crate::{math, Error, Result};

static NEXT_REVISION: AtomicU64 = AtomicU64::new(1);

fn fresh_revision() -> u64 {
    NEXT_REVISION.fetch_add(1, Ordering::Relaxed)
}

/// Neuron nonlinearity.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Tanh,
    Sigmoid,
    Linear,
}

impl Activation {
    #[inline]
    pub fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Tanh => math::tanh(x),
            Activation::Sigmoid => {
                if x >= 0.0 {
                    1.0 / (1.0 + math::exp(-x))
                } else {
                    let e = math::exp(x);
                    e / (1.0 + e)
                }
            }
            Activation::Linear => x,
        }
    }

    /// `f'(x)` expressed through the output `y = f(x)`.
    #[inline]
    pub fn derivative_from_output(self, y: f64) -> f64 {
        match self {
            Activation::Tanh => 1.0 - y * y,
            Activation::Sigmoid => y * (1.0 - y),
            Activation::Linear => 1.0,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Activation::Tanh => "tanh",
            Activation::Sigmoid => "sigmoid",
            Activation::Linear => "linear",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        match name {
            "tanh" => Some(Activation::Tanh),
            "sigmoid" => Some(Activation::Sigmoid),
            "linear" => Some(Activation::Linear),
            _ => None,
        }
    }
}

/// One fully connected layer.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseLayer {
    inputs: usize,
    outputs: usize,
    weights: Vec<f64>,
    biases: Vec<f64>,
    activation: Activation,
}

impl DenseLayer {
    /// All-zero layer.
    pub fn zeros(inputs: usize, outputs: usize, activation: Activation) -> Self {
        DenseLayer {
            inputs,
            outputs,
            weights: vec![0.0; inputs * outputs],
            biases: vec![0.0; outputs],
            activation,
        }
    }

    /// Layer from a row-major `outputs x inputs` weight matrix and biases.
    pub fn from_parts(
        inputs: usize,
        outputs: usize,
        weights: Vec<f64>,
        biases: Vec<f64>,
        activation: Activation,
    ) -> Result<Self> {
        if inputs == 0 || outputs == 0 {
            return Err(Error::InvalidParameter("layer widths must be positive"));
        }
        if weights.len() != inputs * outputs {
            return Err(Error::DimensionMismatch { expected: inputs * outputs, found: weights.len() });
        }
        if biases.len() != outputs {
            return Err(Error::DimensionMismatch { expected: outputs, found: biases.len() });
        }
        if weights.iter().chain(&biases).any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("layer parameters must be finite"));
        }
        Ok(DenseLayer { inputs, outputs, weights, biases, activation })
    }

    /// Glorot-uniform weights in `+-sqrt(6 / (fan_in + fan_out))`, zero biases.
    pub fn glorot<R: RngCore + ?Sized>(inputs: usize, outputs: usize, activation: Activation, rng: &mut R) -> Self {
        let limit = math::sqrt(6.0 / (inputs + outputs) as f64);
        let weights = (0..inputs * outputs).map(|_| uniform_range(rng, -limit, limit)).collect();
        DenseLayer { inputs, outputs, weights, biases: vec![0.0; outputs], activation }
    }

    pub fn inputs(&self) -> usize {
        self.inputs
    }

    pub fn outputs(&self) -> usize {
        self.outputs
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn biases(&self) -> &[f64] {
        &self.biases
    }

    pub fn weights_mut(&mut self) -> &mut [f64] {
        &mut self.weights
    }

    pub fn biases_mut(&mut self) -> &mut [f64] {
        &mut self.biases
    }

    pub fn activation(&self) -> Activation {
        self.activation
    }

    fn param_count(&self) -> usize {
        self.weights.len() + self.biases.len()
    }

    #[inline]
    fn forward_into(&self, input: &[f64], out: &mut [f64]) {
        for ((o, row), &b) in out.iter_mut().zip(self.weights.chunks_exact(self.inputs)).zip(&self.biases) {
            let z: f64 = row.iter().zip(input).map(|(w, x)| w * x).sum::<f64>() + b;
            *o = self.activation.apply(z);
        }
    }
}

/// Ordered stack of dense layers.
#[derive(Debug, Clone)]
pub struct DenseNetwork {
    layers: Vec<DenseLayer>,
    revision: u64,
}

impl PartialEq for DenseNetwork {
    fn eq(&self, other: &Self) -> bool {
        self.layers == other.layers
    }
}

/// Activations recorded by a forward pass, consumed by backward.
#[derive(Debug, Clone, Default)]
pub struct ForwardCache {
    revision: u64,
    /// Start of each layer's activation vector in `values`; entry 0 is the
    /// network input.
    offsets: Vec<usize>,
    values: Vec<f64>,
}

impl ForwardCache {
    pub fn new() -> Self {
        Self::default()
    }

    /// Output of the last layer.
    pub fn output(&self) -> &[f64] {
        let start = *self.offsets.last().expect("cache filled by forward");
        &self.values[start..]
    }

    fn activation(&self, index: usize) -> &[f64] {
        let end = self.offsets.get(index + 1).copied().unwrap_or(self.values.len());
        &self.values[self.offsets[index]..end]
    }
}

/// Reusable buffers for [`DenseNetwork::backward_accumulate`].
#[derive(Debug, Clone, Default)]
pub struct BackwardScratch {
    delta: Vec<f64>,
    upstream: Vec<f64>,
}

impl DenseNetwork {
    /// Network from layers whose widths chain.
    pub fn new(layers: Vec<DenseLayer>) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::InvalidParameter("network needs at least one layer"));
        }
        for pair in layers.windows(2) {
            if pair[0].outputs != pair[1].inputs {
                return Err(Error::DimensionMismatch { expected: pair[0].outputs, found: pair[1].inputs });
            }
        }
        Ok(DenseNetwork { layers, revision: fresh_revision() })
    }

    /// Glorot-initialized network; `widths` has one more entry than
    /// `activations`.
    pub fn glorot<R: RngCore + ?Sized>(widths: &[usize], activations: &[Activation], rng: &mut R) -> Result<Self> {
        if widths.len() != activations.len() + 1 {
            return Err(Error::DimensionMismatch { expected: activations.len() + 1, found: widths.len() });
        }
        if widths.iter().any(|&w| w == 0) {
            return Err(Error::InvalidParameter("layer widths must be positive"));
        }
        let layers = widths
            .windows(2)
            .zip(activations)
            .map(|(w, &act)| DenseLayer::glorot(w[0], w[1], act, rng))
            .collect();
        Self::new(layers)
    }

    pub fn layers(&self) -> &[DenseLayer] {
        &self.layers
    }

    /// Mutable access to one layer; invalidates earlier forward caches.
    pub fn layer_mut(&mut self, index: usize) -> &mut DenseLayer {
        self.revision = fresh_revision();
        &mut self.layers[index]
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].inputs
    }

    pub fn output_dim(&self) -> usize {
        self.layers[self.layers.len() - 1].outputs
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().map(DenseLayer::param_count).sum()
    }

    /// Append all parameters to `out` in flat layout.
    pub fn write_params(&self, out: &mut Vec<f64>) {
        for layer in &self.layers {
            out.extend_from_slice(&layer.weights);
            out.extend_from_slice(&layer.biases);
        }
    }

    pub fn params(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.param_count());
        self.write_params(&mut out);
        out
    }

    /// Overwrite all parameters from a flat vector.
    pub fn set_params(&mut self, params: &[f64]) -> Result<()> {
        if params.len() != self.param_count() {
            return Err(Error::DimensionMismatch { expected: self.param_count(), found: params.len() });
        }
        let mut rest = params;
        for layer in &mut self.layers {
            let (w, tail) = rest.split_at(layer.weights.len());
            let (b, tail) = tail.split_at(layer.biases.len());
            layer.weights.copy_from_slice(w);
            layer.biases.copy_from_slice(b);
            rest = tail;
        }
        self.revision = fresh_revision();
        Ok(())
    }

    /// Forward pass returning the output and the cache needed by backward.
    pub fn forward(&self, input: &[f64]) -> Result<(Vec<f64>, ForwardCache)> {
        let mut cache = ForwardCache::new();
        self.forward_into(input, &mut cache)?;
        Ok((cache.output().to_vec(), cache))
    }

    /// Forward pass into a reusable cache.
    pub fn forward_into(&self, input: &[f64], cache: &mut ForwardCache) -> Result<()> {
        if input.len() != self.input_dim() {
            return Err(Error::DimensionMismatch { expected: self.input_dim(), found: input.len() });
        }
        cache.revision = self.revision;
        cache.offsets.clear();
        cache.values.clear();
        cache.offsets.push(0);
        cache.values.extend_from_slice(input);
        let total = input.len() + self.layers.iter().map(|l| l.outputs).sum::<usize>();
        cache.values.resize(total, 0.0);
        let mut start = 0;
        for layer in &self.layers {
            let mid = start + layer.inputs;
            let (done, rest) = cache.values.split_at_mut(mid);
            layer.forward_into(&done[start..], &mut rest[..layer.outputs]);
            cache.offsets.push(mid);
            start = mid;
        }
        Ok(())
    }

    /// Reverse pass returning `(parameter gradients, input gradient)`.
    pub fn backward(&self, cache: &ForwardCache, grad_output: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
        let mut grads = vec![0.0; self.param_count()];
        let mut scratch = BackwardScratch::default();
        self.backward_accumulate(cache, grad_output, &mut grads, &mut scratch)?;
        Ok((grads, scratch.delta))
    }

    /// Reverse pass adding parameter gradients into `grads`. On return
    /// [`BackwardScratch::input_gradient`] holds `dL/d input`.
    pub fn backward_accumulate(
        &self,
        cache: &ForwardCache,
        grad_output: &[f64],
        grads: &mut [f64],
        scratch: &mut BackwardScratch,
    ) -> Result<()> {
        if cache.revision != self.revision || cache.offsets.len() != self.layers.len() + 1 {
            return Err(Error::StaleCache);
        }
        if grad_output.len() != self.output_dim() {
            return Err(Error::DimensionMismatch { expected: self.output_dim(), found: grad_output.len() });
        }
        if grads.len() != self.param_count() {
            return Err(Error::DimensionMismatch { expected: self.param_count(), found: grads.len() });
        }
        let BackwardScratch { delta, upstream } = scratch;
        delta.clear();
        delta.extend_from_slice(grad_output);
        let mut param_end = grads.len();
        for (index, layer) in self.layers.iter().enumerate().rev() {
            let output = cache.activation(index + 1);
            let input = cache.activation(index);
            for (d, &y) in delta.iter_mut().zip(output) {
                *d *= layer.activation.derivative_from_output(y);
            }
            let param_start = param_end - layer.param_count();
            let (gw, gb) = grads[param_start..param_end].split_at_mut(layer.weights.len());
            for ((row, gb), &d) in gw.chunks_exact_mut(layer.inputs).zip(gb.iter_mut()).zip(delta.iter()) {
                *gb += d;
                if d != 0.0 {
                    for (g, &x) in row.iter_mut().zip(input) {
                        *g += d * x;
                    }
                }
            }
            upstream.clear();
            upstream.resize(layer.inputs, 0.0);
            for (row, &d) in layer.weights.chunks_exact(layer.inputs).zip(delta.iter()) {
                for (u, &w) in upstream.iter_mut().zip(row) {
                    *u += w * d;
                }
            }
            core::mem::swap(delta, upstream);
            param_end = param_start;
        }
        Ok(())
    }
}

impl BackwardScratch {
    /// Gradient with respect to the network input from the last backward pass.
    pub fn input_gradient(&self) -> &[f64] {
        &self.delta
    }
}

/// Lower clamp applied to the posterior of the true message.
pub const POSTERIOR_FLOOR: f64 = 1e-12;

/// Cross-entropy value and whether the floor was hit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CrossEntropy {
    /// Natural-log loss `-ln max(posterior[s], floor)`.
    pub loss: f64,
    pub clamped: bool,
}

/// `-ln posterior[s]` for the hot index `s` of `one_hot` (natural log).
pub fn cross_entropy(one_hot: &[f64], posterior: &[f64]) -> Result<CrossEntropy> {
    if one_hot.len() != posterior.len() {
        return Err(Error::DimensionMismatch { expected: one_hot.len(), found: posterior.len() });
    }
    let mut hot = None;
    for (i, &u) in one_hot.iter().enumerate() {
        if u == 1.0 && hot.is_none() {
            hot = Some(i);
        } else if u != 0.0 {
            return Err(Error::InvalidOneHot);
        }
    }
    let s = hot.ok_or(Error::InvalidOneHot)?;
    Ok(cross_entropy_index(s, posterior))
}

/// Cross-entropy against message index `s`.
#[inline]
pub fn cross_entropy_index(s: usize, posterior: &[f64]) -> CrossEntropy {
    cross_entropy_of(posterior[s])
}

/// Cross-entropy given the posterior probability of the true message.
#[inline]
pub fn cross_entropy_of(p: f64) -> CrossEntropy {
    if p < POSTERIOR_FLOOR {
        CrossEntropy { loss: -math::ln(POSTERIOR_FLOOR), clamped: true }
    } else {
        CrossEntropy { loss: -math::ln(p), clamped: false }
    }
}

/// Adam optimizer state over a flat parameter vector.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub step_count: u64,
    pub first_moment: Vec<f64>,
    pub second_moment: Vec<f64>,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl AdamState {
    /// Fresh state with `beta1 = 0.9`, `beta2 = 0.999`, `epsilon = 1e-8`.
    pub fn new(param_count: usize, learning_rate: f64) -> Self {
        AdamState {
            step_count: 0,
            first_moment: vec![0.0; param_count],
            second_moment: vec![0.0; param_count],
            learning_rate,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }

    /// One bias-corrected Adam update of `params` in place.
    pub fn step(&mut self, params: &mut [f64], grads: &[f64]) -> Result<()> {
        let n = self.first_moment.len();
        if params.len() != n {
            return Err(Error::DimensionMismatch { expected: n, found: params.len() });
        }
        if grads.len() != n {
            return Err(Error::DimensionMismatch { expected: n, found: grads.len() });
        }
        self.step_count += 1;
        let t = self.step_count as f64;
        let correction1 = 1.0 - math::pow(self.beta1, t);
        let correction2 = 1.0 - math::pow(self.beta2, t);
        for (((p, &g), m), v) in params
            .iter_mut()
            .zip(grads)
            .zip(self.first_moment.iter_mut())
            .zip(self.second_moment.iter_mut())
        {
            *m = self.beta1 * *m + (1.0 - self.beta1) * g;
            *v = self.beta2 * *v + (1.0 - self.beta2) * g * g;
            let m_hat = *m / correction1;
            let v_hat = *v / correction2;
            *p -= self.learning_rate * m_hat / (math::sqrt(v_hat) + self.epsilon);
        }
        Ok(())
    }
}
