//! Independent reference values for the linear (gamma = 0) channel, where the
//! output is the input plus circular Gaussian noise.

#![allow(dead_code)]

use fiberae_core::ComplexSample;

/// Gaussian tail probability `P(Z > x)`.
pub fn q(x: f64) -> f64 {
    0.5 * libm::erfc(x / std::f64::consts::SQRT_2)
}

/// Closed-form symbol error rate of square `m`-QAM with minimum-distance
/// detection in complex Gaussian noise of total power `noise_w`.
pub fn qam_awgn_ser(m: usize, power_w: f64, noise_w: f64) -> f64 {
    let side = (m as f64).sqrt();
    // Levels at +-a, +-3a, ...; mean power 2 a^2 (m - 1) / 3.
    let a = (3.0 * power_w / (2.0 * (m as f64 - 1.0))).sqrt();
    let sigma = (noise_w / 2.0).sqrt();
    let p_dim = 2.0 * (1.0 - 1.0 / side) * q(a / sigma);
    1.0 - (1.0 - p_dim) * (1.0 - p_dim)
}

/// Mutual information in bits of a uniform input over `points` through
/// additive complex Gaussian noise of total power `noise_w`, by trapezoidal
/// quadrature over +-`span` standard deviations in each dimension.
pub fn awgn_mi(points: &[ComplexSample], noise_w: f64) -> f64 {
    let m = points.len();
    let sigma = (noise_w / 2.0).sqrt();
    let (span, nodes) = (8.0, 161);
    let step = 2.0 * span / (nodes - 1) as f64;
    let phi = |z: f64| (-0.5 * z * z).exp() / (2.0 * std::f64::consts::PI).sqrt();
    let mut total = 0.0;
    for x in points {
        for i in 0..nodes {
            let zi = -span + i as f64 * step;
            for j in 0..nodes {
                let zj = -span + j as f64 * step;
                let y = ComplexSample::new(x.re + sigma * zi, x.im + sigma * zj);
                // Log-densities up to the common normalization.
                let own = -(zi * zi + zj * zj) / 2.0;
                let logs: Vec<f64> = points.iter().map(|p| -(y - *p).norm_sqr() / noise_w).collect();
                let max = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                let mix = max + logs.iter().map(|l| (l - max).exp()).sum::<f64>().ln() - (m as f64).ln();
                total += phi(zi) * phi(zj) * step * step * (own - mix);
            }
        }
    }
    total / m as f64 / std::f64::consts::LN_2
}

/// Trapezoid sum of `f` over the square `[-r, r]^2` around `center`.
pub fn integrate_2d(center: ComplexSample, r: f64, nodes: usize, f: impl Fn(ComplexSample) -> f64) -> f64 {
    let step = 2.0 * r / (nodes - 1) as f64;
    let mut total = 0.0;
    for i in 0..nodes {
        let wi = if i == 0 || i == nodes - 1 { 0.5 } else { 1.0 };
        for j in 0..nodes {
            let wj = if j == 0 || j == nodes - 1 { 0.5 } else { 1.0 };
            let y = ComplexSample::new(center.re - r + i as f64 * step, center.im - r + j as f64 * step);
            total += wi * wj * f(y);
        }
    }
    total * step * step
}
