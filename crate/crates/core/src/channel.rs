//! Memoryless nonlinear fiber channel.
//!
//! Dispersion is neglected, which leaves a per-sample model: the link is cut
//! into `K` segments, each applying a Kerr phase rotation proportional to the
//! instantaneous power followed by additive circular Gaussian noise,
//!
//! ```text
//! x[k+1] = x[k] * exp(j * L * gamma * |x[k]|^2 / K) + n[k+1],   n ~ CN(0, P_N / K)
//! ```
//!
//! with `x[0]` the channel input and `x[K]` the output. Powers are in watts,
//! `L` in km and `gamma` in rad / (W km), so `L * gamma * |x|^2` is in radians.

use alloc::vec::Vec;
use core::ops::{Add, AddAssign, Mul, Sub};

use rand_core::RngCore;

use crate::rng::standard_normal_pair;
use crate::{math, Error, Result};

/// Convert a power in dBm to watts.
pub fn watts_from_dbm(p_dbm: f64) -> f64 {
    math::pow(10.0, (p_dbm - 30.0) / 10.0)
}

/// Convert a power in watts to dBm.
pub fn dbm_from_watts(p_w: f64) -> f64 {
    10.0 * libm::log10(p_w) + 30.0
}

/// A complex baseband sample, components in sqrt(W).
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ComplexSample {
    pub re: f64,
    pub im: f64,
}

impl ComplexSample {
    pub const ZERO: ComplexSample = ComplexSample { re: 0.0, im: 0.0 };

    #[inline]
    pub const fn new(re: f64, im: f64) -> Self {
        ComplexSample { re, im }
    }

    /// `r * exp(j * phase)`.
    pub fn from_polar(r: f64, phase: f64) -> Self {
        let (s, c) = math::sin_cos(phase);
        ComplexSample::new(r * c, r * s)
    }

    /// Squared magnitude, i.e. instantaneous power.
    #[inline]
    pub fn norm_sqr(self) -> f64 {
        self.re * self.re + self.im * self.im
    }

    #[inline]
    pub fn norm(self) -> f64 {
        math::sqrt(self.norm_sqr())
    }

    #[inline]
    pub fn arg(self) -> f64 {
        math::atan2(self.im, self.re)
    }

    /// Multiply by `exp(j * phase)`.
    #[inline]
    pub fn rotate(self, phase: f64) -> Self {
        let (s, c) = math::sin_cos(phase);
        ComplexSample::new(self.re * c - self.im * s, self.re * s + self.im * c)
    }

    pub fn is_finite(self) -> bool {
        self.re.is_finite() && self.im.is_finite()
    }
}

impl Add for ComplexSample {
    type Output = ComplexSample;
    #[inline]
    fn add(self, rhs: Self) -> Self {
        ComplexSample::new(self.re + rhs.re, self.im + rhs.im)
    }
}

impl AddAssign for ComplexSample {
    #[inline]
    fn add_assign(&mut self, rhs: Self) {
        self.re += rhs.re;
        self.im += rhs.im;
    }
}

impl Sub for ComplexSample {
    type Output = ComplexSample;
    #[inline]
    fn sub(self, rhs: Self) -> Self {
        ComplexSample::new(self.re - rhs.re, self.im - rhs.im)
    }
}

impl Mul<f64> for ComplexSample {
    type Output = ComplexSample;
    #[inline]
    fn mul(self, rhs: f64) -> Self {
        ComplexSample::new(self.re * rhs, self.im * rhs)
    }
}

/// Physical constants of the link.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelParams {
    /// Total link length `L` in km.
    pub link_length_km: f64,
    /// Nonlinearity coefficient `gamma` in rad / (W km).
    pub gamma: f64,
    /// Total accumulated noise power `P_N` in watts.
    pub noise_power_w: f64,
    /// Number of segments `K`.
    pub segments: usize,
    pub seed: u64,
}

impl Default for ChannelParams {
    fn default() -> Self {
        ChannelParams {
            link_length_km: 5000.0,
            gamma: 1.27,
            noise_power_w: watts_from_dbm(-21.3),
            segments: 50,
            seed: 0,
        }
    }
}

impl ChannelParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.link_length_km > 0.0 && self.link_length_km.is_finite()) {
            return Err(Error::InvalidParameter("link length must be positive"));
        }
        if !(self.gamma >= 0.0 && self.gamma.is_finite()) {
            return Err(Error::InvalidParameter("gamma must be non-negative"));
        }
        if !(self.noise_power_w >= 0.0 && self.noise_power_w.is_finite()) {
            return Err(Error::InvalidParameter("noise power must be non-negative"));
        }
        if self.segments == 0 {
            return Err(Error::InvalidParameter("segment count must be at least 1"));
        }
        Ok(())
    }

    /// Same link with linear propagation (`gamma = 0`).
    pub fn linear(self) -> Self {
        ChannelParams { gamma: 0.0, ..self }
    }

    /// Phase rotation per segment per watt, `L * gamma / K`.
    #[inline]
    pub fn phase_per_segment(&self) -> f64 {
        self.link_length_km * self.gamma / self.segments as f64
    }

    /// Standard deviation of each real component of one segment's noise.
    #[inline]
    pub fn component_sigma(&self) -> f64 {
        math::sqrt(self.noise_power_w / (2.0 * self.segments as f64))
    }

    /// Total nonlinear phase `L * gamma * |x|^2` of a noiseless input.
    pub fn nonlinear_phase(&self, x: ComplexSample) -> f64 {
        self.link_length_km * self.gamma * x.norm_sqr()
    }
}

#[inline]
fn complex_noise<R: RngCore + ?Sized>(rng: &mut R, sigma: f64) -> ComplexSample {
    let (a, b) = standard_normal_pair(rng);
    ComplexSample::new(sigma * a, sigma * b)
}

/// Fill `out` with one realization of the `K` segment noises.
///
/// Draw order matches [`propagate`], so `propagate_tape(x, noise)` with noise
/// from this function reproduces `propagate` on the same stream.
pub fn draw_noise<R: RngCore + ?Sized>(params: &ChannelParams, rng: &mut R, out: &mut Vec<ComplexSample>) {
    let sigma = params.component_sigma();
    out.clear();
    out.extend((0..params.segments).map(|_| complex_noise(rng, sigma)));
}

/// Send one sample through the channel.
pub fn propagate<R: RngCore + ?Sized>(x: ComplexSample, params: &ChannelParams, rng: &mut R) -> ComplexSample {
    let c = params.phase_per_segment();
    let sigma = params.component_sigma();
    let mut state = x;
    for _ in 0..params.segments {
        state = state.rotate(c * state.norm_sqr()) + complex_noise(rng, sigma);
    }
    state
}

/// Deterministic propagation for a fixed noise realization.
#[inline]
pub fn propagate_fixed(x: ComplexSample, noise: &[ComplexSample], params: &ChannelParams) -> ComplexSample {
    let c = params.phase_per_segment();
    noise
        .iter()
        .fold(x, |state, &n| state.rotate(c * state.norm_sqr()) + n)
}

/// Record of one propagation: all intermediate states and the noise used.
#[derive(Debug, Clone, PartialEq)]
pub struct PropagationTape {
    states: Vec<ComplexSample>,
    noise: Vec<ComplexSample>,
    params: ChannelParams,
}

/// Propagate with caller-supplied noise and keep the states for
/// [`backprop_channel`].
pub fn propagate_tape(
    x: ComplexSample,
    noise: &[ComplexSample],
    params: &ChannelParams,
) -> Result<(ComplexSample, PropagationTape)> {
    let mut tape = PropagationTape {
        states: Vec::with_capacity(params.segments + 1),
        noise: Vec::new(),
        params: *params,
    };
    let y = tape.record(x, noise)?;
    Ok((y, tape))
}

impl PropagationTape {
    /// An empty tape to be filled by [`PropagationTape::record`].
    pub fn new(params: &ChannelParams) -> Self {
        PropagationTape {
            states: Vec::with_capacity(params.segments + 1),
            noise: Vec::with_capacity(params.segments),
            params: *params,
        }
    }

    /// Re-run the recursion in place, reusing the tape's buffers.
    pub fn record(&mut self, x: ComplexSample, noise: &[ComplexSample]) -> Result<ComplexSample> {
        let k = self.params.segments;
        if noise.len() != k {
            return Err(Error::DimensionMismatch { expected: k, found: noise.len() });
        }
        let c = self.params.phase_per_segment();
        self.noise.clear();
        self.noise.extend_from_slice(noise);
        self.states.clear();
        self.states.push(x);
        let mut state = x;
        for &n in noise {
            state = state.rotate(c * state.norm_sqr()) + n;
            self.states.push(state);
        }
        Ok(state)
    }

    /// `x[0] ..= x[K]`.
    pub fn states(&self) -> &[ComplexSample] {
        &self.states
    }

    /// `n[1] ..= n[K]`.
    pub fn noise(&self) -> &[ComplexSample] {
        &self.noise
    }

    pub fn params(&self) -> &ChannelParams {
        &self.params
    }

    pub fn input(&self) -> ComplexSample {
        self.states[0]
    }

    pub fn output(&self) -> ComplexSample {
        *self.states.last().expect("tape holds at least the input")
    }

    /// Recompute every state from `x[0]` and the stored noise; true when the
    /// recursion reproduces the recorded states bit for bit.
    pub fn replays_exactly(&self) -> bool {
        let c = self.params.phase_per_segment();
        let mut state = self.states[0];
        for (k, &n) in self.noise.iter().enumerate() {
            state = state.rotate(c * state.norm_sqr()) + n;
            if state.re.to_bits() != self.states[k + 1].re.to_bits()
                || state.im.to_bits() != self.states[k + 1].im.to_bits()
            {
                return false;
            }
        }
        true
    }
}

/// Vector-Jacobian product through a recorded propagation.
///
/// Given `dL/d(re y, im y)` returns `dL/d(re x, im x)`. Each segment maps
/// `(a, b)` to `(a cos t - b sin t, a sin t + b cos t)` with
/// `t = c (a^2 + b^2)`; the additive noise has identity Jacobian.
pub fn backprop_channel(tape: &PropagationTape, grad_y: [f64; 2]) -> [f64; 2] {
    let c = tape.params.phase_per_segment();
    let [mut gu, mut gv] = grad_y;
    for state in tape.states[..tape.states.len() - 1].iter().rev() {
        let (a, b) = (state.re, state.im);
        let (s, co) = math::sin_cos(c * (a * a + b * b));
        let u = a * co - b * s;
        let v = a * s + b * co;
        let (ta, tb) = (2.0 * c * a, 2.0 * c * b);
        let ga = (co - ta * v) * gu + (s + ta * u) * gv;
        let gb = (-s - tb * v) * gu + (co + tb * u) * gv;
        gu = ga;
        gv = gb;
    }
    [gu, gv]
}
