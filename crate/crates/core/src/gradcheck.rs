//! Central finite-difference checks of every analytic gradient path.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::autoencoder::{Architecture, AutoencoderModel};
use crate::channel::{backprop_channel, draw_noise, propagate_fixed, propagate_tape, watts_from_dbm, ChannelParams, ComplexSample};
use crate::nn::{Activation, DenseNetwork};
use crate::rng::{stream, uniform_range, Domain};
use crate::Result;

/// Step of the two-point central differences used through the channel.
pub const FD_STEP: f64 = 1e-6;
/// Step of the fourth-order central differences used for dense networks.
pub const FD_STEP_NET: f64 = 1e-4;
/// Pass threshold of the gradient suite.
pub const TOLERANCE: f64 = 1e-5;

/// Worst componentwise relative error between two gradients.
///
/// The denominator of each component is floored at `1e-3` times the largest
/// magnitude in either vector, so components that are pure round-off next to
/// much larger ones do not dominate.
pub fn max_relative_error(analytic: &[f64], numeric: &[f64]) -> f64 {
    let scale = analytic.iter().chain(numeric).fold(0.0f64, |m, v| m.max(v.abs()));
    if scale == 0.0 {
        return 0.0;
    }
    let floor = 1e-3 * scale;
    analytic
        .iter()
        .zip(numeric)
        .map(|(a, n)| (a - n).abs() / a.abs().max(n.abs()).max(floor))
        .fold(0.0, f64::max)
}

/// Five-point stencil `(-f(x+2h) + 8f(x+h) - 8f(x-h) + f(x-2h)) / 12h`.
fn central_difference_4<F: FnMut(&[f64]) -> Result<f64>>(point: &[f64], mut f: F) -> Result<Vec<f64>> {
    let h = FD_STEP_NET;
    let mut x = point.to_vec();
    let mut out = Vec::with_capacity(x.len());
    for i in 0..x.len() {
        let orig = x[i];
        let mut at = |offset: f64, x: &mut Vec<f64>| {
            x[i] = orig + offset;
            f(x)
        };
        let v = [at(2.0 * h, &mut x)?, at(h, &mut x)?, at(-h, &mut x)?, at(-2.0 * h, &mut x)?];
        x[i] = orig;
        out.push((-v[0] + 8.0 * v[1] - 8.0 * v[2] + v[3]) / (12.0 * h));
    }
    Ok(out)
}

fn central_difference<F: FnMut(&[f64]) -> Result<f64>>(point: &[f64], mut f: F) -> Result<Vec<f64>> {
    let mut x = point.to_vec();
    let mut out = Vec::with_capacity(x.len());
    for i in 0..x.len() {
        let orig = x[i];
        x[i] = orig + FD_STEP;
        let up = f(&x)?;
        x[i] = orig - FD_STEP;
        let down = f(&x)?;
        x[i] = orig;
        out.push((up - down) / (2.0 * FD_STEP));
    }
    Ok(out)
}

/// Compare [`DenseNetwork::backward`] with central differences of
/// `loss(output) -> (value, d value / d output)` over all parameters and the
/// input; returns the worst relative error.
pub fn grad_check<F>(net: &DenseNetwork, loss: F, input: &[f64]) -> Result<f64>
where
    F: Fn(&[f64]) -> (f64, Vec<f64>),
{
    let (out, cache) = net.forward(input)?;
    let (_, grad_out) = loss(&out);
    let (grads, grad_in) = net.backward(&cache, &grad_out)?;

    let mut probe = net.clone();
    let numeric = central_difference_4(&net.params(), |p| {
        probe.set_params(p)?;
        Ok(loss(&probe.forward(input)?.0).0)
    })?;
    let numeric_in = central_difference_4(input, |x| Ok(loss(&net.forward(x)?.0).0))?;
    // Parameters and input form one gradient vector with one scale.
    let analytic: Vec<f64> = grads.iter().chain(&grad_in).copied().collect();
    let numeric: Vec<f64> = numeric.iter().chain(&numeric_in).copied().collect();
    Ok(max_relative_error(&analytic, &numeric))
}

/// `0.5 |output - target|^2`.
pub fn quadratic_loss(target: &[f64]) -> impl Fn(&[f64]) -> (f64, Vec<f64>) + '_ {
    move |out: &[f64]| {
        let diff: Vec<f64> = out.iter().zip(target).map(|(o, t)| o - t).collect();
        (0.5 * diff.iter().map(|d| d * d).sum::<f64>(), diff)
    }
}

/// Channel gradient check for a random noise realization: the analytic
/// vector-Jacobian product of a fixed linear functional of `y` against
/// central differences in `x`.
pub fn channel_grad_check(params: &ChannelParams, x: ComplexSample, seed: u64) -> Result<f64> {
    let mut rng = stream(seed, Domain::Channel, 0);
    let mut noise = Vec::new();
    draw_noise(params, &mut rng, &mut noise);
    let w = [uniform_range(&mut rng, -1.0, 1.0), uniform_range(&mut rng, -1.0, 1.0)];
    let (_, tape) = propagate_tape(x, &noise, params)?;
    let analytic = backprop_channel(&tape, w);
    let numeric = central_difference(&[x.re, x.im], |p| {
        let y = propagate_fixed(ComplexSample::new(p[0], p[1]), &noise, params);
        Ok(w[0] * y.re + w[1] * y.im)
    })?;
    Ok(max_relative_error(&analytic, &numeric))
}

/// Check the end-to-end batch gradient of `model` for a balanced batch of
/// `batch_size` messages with fixed noise.
pub fn end_to_end_grad_check(model: &AutoencoderModel, batch_size: usize, seed: u64) -> Result<f64> {
    let params = *model.channel();
    let messages: Vec<usize> = (0..batch_size).map(|i| i % model.m()).collect();
    let mut rng = stream(seed, Domain::Training, 0);
    let mut noise = Vec::new();
    let mut one = Vec::new();
    for _ in 0..batch_size {
        draw_noise(&params, &mut rng, &mut one);
        noise.extend_from_slice(&one);
    }
    let mut analytic = vec![0.0; model.param_count()];
    model.batch_objective(&messages, &noise, Some(&mut analytic))?;
    let mut probe = model.clone();
    let numeric = central_difference(&model.params(), |p| {
        probe.set_params(p)?;
        Ok(probe.batch_objective(&messages, &noise, None)?.loss)
    })?;
    Ok(max_relative_error(&analytic, &numeric))
}

/// One line of the gradient report.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientCheck {
    pub module: &'static str,
    pub case: String,
    pub max_relative_error: f64,
}

impl GradientCheck {
    pub fn passed(&self) -> bool {
        self.max_relative_error <= TOLERANCE
    }
}

/// Dense networks, channel backpropagation for `K` in {1, 5, 50}, and the full
/// transmitter-normalization-channel-receiver chain (`m = 4`, `K = 5`,
/// `N = 8`).
pub fn gradient_suite(channel: &ChannelParams, seed: u64) -> Result<Vec<GradientCheck>> {
    let mut report = Vec::new();
    let mut rng = stream(seed, Domain::Init, 0xd15e);

    let tanh3 = DenseNetwork::glorot(
        &[4, 8, 4],
        &[Activation::Tanh, Activation::Sigmoid],
        &mut rng,
    )?;
    let target = [0.1, 0.9, 0.3, 0.5];
    report.push(GradientCheck {
        module: "neural-core",
        case: "4-8-4 tanh/sigmoid, quadratic loss".into(),
        max_relative_error: grad_check(&tanh3, quadratic_loss(&target), &[0.3, -0.7, 0.2, 0.9])?,
    });
    let mut widths = vec![2];
    widths.extend([16; 7]);
    let mut acts = vec![Activation::Tanh; 6];
    acts.push(Activation::Sigmoid);
    let receiver = DenseNetwork::glorot(&widths, &acts, &mut rng)?;
    let target: Vec<f64> = (0..16).map(|i| if i == 3 { 1.0 } else { 0.0 }).collect();
    report.push(GradientCheck {
        module: "neural-core",
        case: "2-16x6-16 receiver stack, quadratic loss".into(),
        max_relative_error: grad_check(&receiver, quadratic_loss(&target), &[0.8, -0.4])?,
    });

    for k in [1, 5, 50] {
        let params = ChannelParams { segments: k, ..*channel };
        let mut worst: f64 = 0.0;
        for (i, p_dbm) in [-5.0, 0.0, 5.0].into_iter().enumerate() {
            let x = ComplexSample::from_polar(crate::math::sqrt(watts_from_dbm(p_dbm)), 0.4 + i as f64);
            worst = worst.max(channel_grad_check(&params, x, seed.wrapping_add(i as u64))?);
        }
        report.push(GradientCheck {
            module: "fiber-channel",
            case: alloc::format!("K={k}, inputs at -5/0/5 dBm"),
            max_relative_error: worst,
        });
    }

    let params = ChannelParams { segments: 5, ..*channel };
    let model = AutoencoderModel::new(4, &Architecture::standard(4), params, watts_from_dbm(0.0), seed)?;
    report.push(GradientCheck {
        module: "autoencoder",
        case: "end-to-end m=4, K=5, N=8, 0 dBm".into(),
        max_relative_error: end_to_end_grad_check(&model, 8, seed)?,
    });
    Ok(report)
}
