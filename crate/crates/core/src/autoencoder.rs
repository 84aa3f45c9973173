//! Transmitter network, power normalization, channel and receiver network
//! trained end to end.
//!
//! Message `s` (indexed `0..m`) is one-hot encoded and mapped by the
//! transmitter to two real outputs `(z_r, z_i)`. All `m` transmitter outputs
//! are scaled jointly so the constellation's mean power equals the input
//! power. The receiver sees the channel output scaled by `1 / sqrt(P_in)` and
//! ends in sigmoid units whose outputs are normalized to sum to one.

use alloc::vec;
use alloc::vec::Vec;

use crate::channel::{backprop_channel, draw_noise, watts_from_dbm, ChannelParams, ComplexSample, PropagationTape};
use crate::nn::{cross_entropy_of, Activation, AdamState, BackwardScratch, DenseNetwork, ForwardCache};
use crate::rng::{stream, Domain};
use crate::{math, Error, Result};

/// Hidden-layer widths of both networks.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Architecture {
    /// Hidden tanh layers of the transmitter (output layer is 2 linear units).
    pub tx_hidden: Vec<usize>,
    /// Hidden tanh layers of the receiver (output layer is `m` sigmoid units).
    pub rx_hidden: Vec<usize>,
}

impl Architecture {
    /// Five hidden transmitter layers and six hidden receiver layers, all `m`
    /// wide.
    pub fn standard(m: usize) -> Self {
        Architecture { tx_hidden: vec![m; 5], rx_hidden: vec![m; 6] }
    }
}

/// Receiver output normalized to a distribution over messages.
#[derive(Debug, Clone, PartialEq)]
pub struct Posterior {
    values: Vec<f64>,
}

impl Posterior {
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Most likely message; ties go to the lowest index.
    pub fn argmax(&self) -> usize {
        argmax(&self.values)
    }
}

pub(crate) fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}

/// Hyperparameters of one training run.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    /// Samples per batch; must be a multiple of `m`.
    pub batch_size: usize,
    pub batches: usize,
    pub learning_rate: f64,
    pub seed: u64,
    /// Input power the model is trained at.
    pub power_dbm: f64,
}

impl TrainConfig {
    /// `N = 64 m`, `10^4` batches, learning rate `1e-3`.
    pub fn standard(m: usize, power_dbm: f64) -> Self {
        TrainConfig { batch_size: 64 * m, batches: 10_000, learning_rate: 1e-3, seed: 0, power_dbm }
    }

    pub fn validate(&self, m: usize) -> Result<()> {
        if self.batch_size == 0 || self.batch_size % m != 0 {
            return Err(Error::InvalidParameter("batch size must be a positive multiple of m"));
        }
        if self.batches == 0 {
            return Err(Error::InvalidParameter("batch count must be positive"));
        }
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::InvalidParameter("learning rate must be non-negative"));
        }
        if !self.power_dbm.is_finite() {
            return Err(Error::InvalidParameter("power must be finite"));
        }
        Ok(())
    }
}

/// Outcome of [`AutoencoderModel::train`].
#[derive(Debug, Clone, PartialEq)]
pub struct TrainReport {
    /// Mean cross-entropy (nats) of every batch, before its update.
    pub loss_trace: Vec<f64>,
    /// Samples whose true-message posterior hit the floor.
    pub clamped: u64,
}

/// Batch objective value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BatchLoss {
    pub loss: f64,
    pub clamped: u64,
}

/// The end-to-end system.
#[derive(Debug, Clone, PartialEq)]
pub struct AutoencoderModel {
    m: usize,
    tx: DenseNetwork,
    rx: DenseNetwork,
    norm_scale: f64,
    params: ChannelParams,
    input_power_w: f64,
}

/// Reusable buffers for receiver evaluation.
#[derive(Debug, Clone, Default)]
pub struct RxWorkspace {
    cache: ForwardCache,
    posterior: Vec<f64>,
}

impl AutoencoderModel {
    /// Glorot-initialized model, normalized to `input_power_w`.
    pub fn new(
        m: usize,
        architecture: &Architecture,
        params: ChannelParams,
        input_power_w: f64,
        seed: u64,
    ) -> Result<Self> {
        if m < 2 {
            return Err(Error::InvalidParameter("m must be at least 2"));
        }
        let mut rng = stream(seed, Domain::Init, 0);
        let mut tx_widths = vec![m];
        tx_widths.extend_from_slice(&architecture.tx_hidden);
        tx_widths.push(2);
        let mut tx_acts = vec![Activation::Tanh; architecture.tx_hidden.len()];
        tx_acts.push(Activation::Linear);
        let mut rx_widths = vec![2];
        rx_widths.extend_from_slice(&architecture.rx_hidden);
        rx_widths.push(m);
        let mut rx_acts = vec![Activation::Tanh; architecture.rx_hidden.len()];
        rx_acts.push(Activation::Sigmoid);
        let tx = DenseNetwork::glorot(&tx_widths, &tx_acts, &mut rng)?;
        let rx = DenseNetwork::glorot(&rx_widths, &rx_acts, &mut rng)?;
        let mut model = Self::from_parts(m, tx, rx, 1.0, params, input_power_w)?;
        model.renormalize()?;
        Ok(model)
    }

    /// Assemble a model from explicit networks without renormalizing.
    pub fn from_parts(
        m: usize,
        tx: DenseNetwork,
        rx: DenseNetwork,
        norm_scale: f64,
        params: ChannelParams,
        input_power_w: f64,
    ) -> Result<Self> {
        params.validate()?;
        if m < 2 {
            return Err(Error::InvalidParameter("m must be at least 2"));
        }
        if tx.input_dim() != m {
            return Err(Error::DimensionMismatch { expected: m, found: tx.input_dim() });
        }
        if tx.output_dim() != 2 {
            return Err(Error::DimensionMismatch { expected: 2, found: tx.output_dim() });
        }
        if rx.input_dim() != 2 {
            return Err(Error::DimensionMismatch { expected: 2, found: rx.input_dim() });
        }
        if rx.output_dim() != m {
            return Err(Error::DimensionMismatch { expected: m, found: rx.output_dim() });
        }
        if !(norm_scale > 0.0 && norm_scale.is_finite()) {
            return Err(Error::InvalidParameter("normalization scale must be positive"));
        }
        if !(input_power_w > 0.0 && input_power_w.is_finite()) {
            return Err(Error::InvalidParameter("input power must be positive"));
        }
        Ok(AutoencoderModel { m, tx, rx, norm_scale, params, input_power_w })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn tx(&self) -> &DenseNetwork {
        &self.tx
    }

    pub fn rx(&self) -> &DenseNetwork {
        &self.rx
    }

    pub fn tx_mut(&mut self) -> &mut DenseNetwork {
        &mut self.tx
    }

    pub fn rx_mut(&mut self) -> &mut DenseNetwork {
        &mut self.rx
    }

    pub fn norm_scale(&self) -> f64 {
        self.norm_scale
    }

    pub fn channel(&self) -> &ChannelParams {
        &self.params
    }

    pub fn input_power_w(&self) -> f64 {
        self.input_power_w
    }

    /// Move the operating point; renormalizes the constellation.
    pub fn set_input_power(&mut self, input_power_w: f64) -> Result<()> {
        if !(input_power_w > 0.0 && input_power_w.is_finite()) {
            return Err(Error::InvalidParameter("input power must be positive"));
        }
        self.input_power_w = input_power_w;
        self.renormalize().map(|_| ())
    }

    /// Fixed gain applied to the channel output before the receiver network.
    pub fn rx_gain(&self) -> f64 {
        1.0 / math::sqrt(self.input_power_w)
    }

    fn check_message(&self, s: usize) -> Result<()> {
        if s >= self.m {
            return Err(Error::IndexOutOfRange { index: s, m: self.m });
        }
        Ok(())
    }

    fn one_hot(&self, s: usize) -> Vec<f64> {
        let mut u = vec![0.0; self.m];
        u[s] = 1.0;
        u
    }

    /// Transmitter output for message `s` before power normalization.
    pub fn raw_symbol(&self, s: usize) -> Result<ComplexSample> {
        self.check_message(s)?;
        let (out, _) = self.tx.forward(&self.one_hot(s))?;
        Ok(ComplexSample::new(out[0], out[1]))
    }

    pub fn raw_symbols(&self) -> Result<Vec<ComplexSample>> {
        (0..self.m).map(|s| self.raw_symbol(s)).collect()
    }

    /// Recompute the scale so the constellation has mean power `P_in`.
    pub fn renormalize(&mut self) -> Result<f64> {
        let raw = self.raw_symbols()?;
        self.norm_scale = normalization_scale(&raw, self.input_power_w)?;
        Ok(self.norm_scale)
    }

    /// Channel symbol for message `s`.
    pub fn encode(&self, s: usize) -> Result<ComplexSample> {
        Ok(self.raw_symbol(s)? * self.norm_scale)
    }

    /// All `m` channel symbols in message order.
    pub fn constellation(&self) -> Result<Vec<ComplexSample>> {
        (0..self.m).map(|s| self.encode(s)).collect()
    }

    /// Normalized receiver output for channel output `y`.
    pub fn decode(&self, y: ComplexSample) -> Result<Posterior> {
        let mut ws = RxWorkspace::default();
        let values = self.posterior_with(&mut ws, y)?.to_vec();
        Ok(Posterior { values })
    }

    /// [`AutoencoderModel::decode`] into reusable buffers.
    pub fn posterior_with<'w>(&self, ws: &'w mut RxWorkspace, y: ComplexSample) -> Result<&'w [f64]> {
        let g = self.rx_gain();
        self.rx.forward_into(&[y.re * g, y.im * g], &mut ws.cache)?;
        let out = ws.cache.output();
        let total: f64 = out.iter().sum();
        ws.posterior.clear();
        ws.posterior.extend(out.iter().map(|v| v / total));
        Ok(&ws.posterior)
    }

    /// Message decision: argmax of the posterior, lowest index on ties.
    pub fn detect(&self, y: ComplexSample) -> Result<usize> {
        Ok(self.decode(y)?.argmax())
    }

    /// Number of trainable parameters (transmitter then receiver).
    pub fn param_count(&self) -> usize {
        self.tx.param_count() + self.rx.param_count()
    }

    /// Flat parameters: transmitter layout followed by receiver layout.
    pub fn params(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.param_count());
        self.tx.write_params(&mut out);
        self.rx.write_params(&mut out);
        out
    }

    /// Overwrite all parameters. The normalization scale is not touched.
    pub fn set_params(&mut self, params: &[f64]) -> Result<()> {
        if params.len() != self.param_count() {
            return Err(Error::DimensionMismatch { expected: self.param_count(), found: params.len() });
        }
        let (tx, rx) = params.split_at(self.tx.param_count());
        self.tx.set_params(tx)?;
        self.rx.set_params(rx)
    }

    /// Mean cross-entropy of a batch under fixed channel noise, and
    /// optionally its gradient with respect to [`AutoencoderModel::params`].
    ///
    /// `noise` holds `K` samples per entry of `messages`. The normalization
    /// scale is recomputed from the current transmitter and differentiated.
    pub fn batch_objective(
        &self,
        messages: &[usize],
        noise: &[ComplexSample],
        grads: Option<&mut [f64]>,
    ) -> Result<BatchLoss> {
        let k = self.params.segments;
        if noise.len() != messages.len() * k {
            return Err(Error::DimensionMismatch { expected: messages.len() * k, found: noise.len() });
        }
        if messages.is_empty() {
            return Err(Error::InvalidParameter("batch must not be empty"));
        }
        if let Some(&bad) = messages.iter().find(|&&s| s >= self.m) {
            return Err(Error::IndexOutOfRange { index: bad, m: self.m });
        }
        let m = self.m;
        let mut tx_caches = vec![ForwardCache::new(); m];
        let mut raw = Vec::with_capacity(m);
        for (s, cache) in tx_caches.iter_mut().enumerate() {
            self.tx.forward_into(&self.one_hot(s), cache)?;
            let out = cache.output();
            raw.push(ComplexSample::new(out[0], out[1]));
        }
        let power_sum: f64 = raw.iter().map(|r| r.norm_sqr()).sum();
        let scale = normalization_scale(&raw, self.input_power_w)?;

        let want_grads = grads.is_some();
        let n_tx = self.tx.param_count();
        let mut rx_grads = vec![0.0; if want_grads { self.rx.param_count() } else { 0 }];
        let mut grad_x = vec![[0.0f64; 2]; m];
        let mut tape = PropagationTape::new(&self.params);
        let mut cache = ForwardCache::new();
        let mut scratch = BackwardScratch::default();
        let mut grad_sig = vec![0.0; m];
        let inv_n = 1.0 / messages.len() as f64;
        let gain = self.rx_gain();
        let mut loss_sum = 0.0;
        let mut clamped = 0;

        for (i, &s) in messages.iter().enumerate() {
            let y = tape.record(raw[s] * scale, &noise[i * k..(i + 1) * k])?;
            self.rx.forward_into(&[y.re * gain, y.im * gain], &mut cache)?;
            let sig = cache.output();
            let total: f64 = sig.iter().sum();
            let ce = cross_entropy_of(sig[s] / total);
            loss_sum += ce.loss;
            if ce.clamped {
                clamped += 1;
                continue;
            }
            if !want_grads {
                continue;
            }
            // L = -ln sig_s + ln sum(sig)
            for (j, g) in grad_sig.iter_mut().enumerate() {
                *g = inv_n / total;
                if j == s {
                    *g -= inv_n / sig[s];
                }
            }
            self.rx.backward_accumulate(&cache, &grad_sig, &mut rx_grads, &mut scratch)?;
            let gy = scratch.input_gradient();
            let gx = backprop_channel(&tape, [gy[0] * gain, gy[1] * gain]);
            grad_x[s][0] += gx[0];
            grad_x[s][1] += gx[1];
        }

        if let Some(grads) = grads {
            if grads.len() != self.param_count() {
                return Err(Error::DimensionMismatch { expected: self.param_count(), found: grads.len() });
            }
            // x_s = c r_s with c = sqrt(P_in m / sum |r|^2), so
            // dL/dr_t = c (g_t - r_t (sum_s g_s . r_s) / sum |r|^2).
            let dot: f64 = grad_x.iter().zip(&raw).map(|(g, r)| g[0] * r.re + g[1] * r.im).sum();
            let (tx_grads, rx_out) = grads.split_at_mut(n_tx);
            for (g, r) in rx_out.iter_mut().zip(&rx_grads) {
                *g += r;
            }
            for s in 0..m {
                let gr = [
                    scale * (grad_x[s][0] - raw[s].re * dot / power_sum),
                    scale * (grad_x[s][1] - raw[s].im * dot / power_sum),
                ];
                self.tx.backward_accumulate(&tx_caches[s], &gr, tx_grads, &mut scratch)?;
            }
        }
        Ok(BatchLoss { loss: loss_sum * inv_n, clamped })
    }

    /// Train at `config.power_dbm` with Adam on all weights and biases.
    ///
    /// Each batch holds every message `batch_size / m` times with fresh
    /// channel noise. On return the model is renormalized.
    pub fn train(&mut self, config: &TrainConfig) -> Result<TrainReport> {
        self.train_with(config, |_, _| {})
    }

    /// [`AutoencoderModel::train`] with a per-batch callback `(batch, loss)`.
    pub fn train_with<F: FnMut(usize, f64)>(&mut self, config: &TrainConfig, mut on_batch: F) -> Result<TrainReport> {
        config.validate(self.m)?;
        self.input_power_w = watts_from_dbm(config.power_dbm);
        let k = self.params.segments;
        let n = config.batch_size;
        let messages: Vec<usize> = (0..n).map(|i| i % self.m).collect();
        let mut adam = AdamState::new(self.param_count(), config.learning_rate);
        let mut params = self.params();
        let mut grads = vec![0.0; params.len()];
        let mut noise = Vec::with_capacity(n * k);
        let mut sample_noise = Vec::with_capacity(k);
        let mut report = TrainReport { loss_trace: Vec::with_capacity(config.batches), clamped: 0 };

        for batch in 0..config.batches {
            let mut rng = stream(config.seed, Domain::Training, batch as u64);
            noise.clear();
            for _ in 0..n {
                draw_noise(&self.params, &mut rng, &mut sample_noise);
                noise.extend_from_slice(&sample_noise);
            }
            grads.iter_mut().for_each(|g| *g = 0.0);
            let loss = self.batch_objective(&messages, &noise, Some(&mut grads))?;
            if !loss.loss.is_finite() || grads.iter().any(|g| !g.is_finite()) {
                return Err(Error::Diverged { batch });
            }
            report.loss_trace.push(loss.loss);
            report.clamped += loss.clamped;
            on_batch(batch, loss.loss);
            adam.step(&mut params, &grads)?;
            self.set_params(&params)?;
        }
        self.renormalize()?;
        Ok(report)
    }
}

/// `sqrt(P_in / mean |r|^2)` over the raw transmitter outputs.
pub fn normalization_scale(raw: &[ComplexSample], input_power_w: f64) -> Result<f64> {
    let mean_power = raw.iter().map(|r| r.norm_sqr()).sum::<f64>() / raw.len() as f64;
    if !(mean_power > 0.0 && mean_power.is_finite()) {
        return Err(Error::ZeroPower);
    }
    Ok(math::sqrt(input_power_w / mean_power))
}
