use fiberae_core::channel::{backprop_channel, draw_noise, propagate, propagate_fixed, propagate_tape};
use fiberae_core::gradcheck::{channel_grad_check, max_relative_error, FD_STEP};
use fiberae_core::rng::{standard_normal_pair, stream, Domain};
use fiberae_core::{watts_from_dbm, ChannelParams, ComplexSample};
use proptest::prelude::*;
use std::f64::consts::TAU;

fn wrap(phase: f64) -> f64 {
    phase.rem_euclid(TAU)
}

fn phase_error(a: f64, b: f64) -> f64 {
    let d = wrap(a - b);
    d.min(TAU - d)
}

#[test]
fn linear_channel_adds_noise_of_power_pn() {
    let params = ChannelParams { gamma: 0.0, ..ChannelParams::default() };
    let x = ComplexSample::new(0.02, -0.03);
    let mut rng = stream(1, Domain::Channel, 0);
    let n = 1_000_000;
    let (mut sum, mut sum_sq) = (ComplexSample::ZERO, 0.0);
    for _ in 0..n {
        let d = propagate(x, &params, &mut rng) - x;
        sum += d;
        sum_sq += d.norm_sqr();
    }
    let mean = sum * (1.0 / n as f64);
    let variance = sum_sq / n as f64 - mean.norm_sqr();
    let pn = params.noise_power_w;
    assert!((variance / pn - 1.0).abs() < 0.02, "variance {variance}, P_N {pn}");
    let se = (pn / 2.0 / n as f64).sqrt();
    assert!(mean.re.abs() < 3.0 * se && mean.im.abs() < 3.0 * se, "mean offset {mean:?}");
}

#[test]
fn same_seed_same_outputs() {
    let params = ChannelParams::default();
    let x = ComplexSample::new(0.03, 0.01);
    let run = |seed| {
        let mut rng = stream(seed, Domain::Channel, 3);
        (0..100).map(|_| propagate(x, &params, &mut rng)).collect::<Vec<_>>()
    };
    assert_eq!(run(5), run(5));
    assert_ne!(run(5), run(6));
}

#[test]
fn ten_segment_tape_replays_and_differentiates() {
    let params = ChannelParams { segments: 10, ..ChannelParams::default() };
    for seed in 0..20 {
        let mut rng = stream(seed, Domain::Channel, 0);
        let (a, b) = standard_normal_pair(&mut rng);
        let x = ComplexSample::new(a, b) * watts_from_dbm(2.0).sqrt();
        let mut noise = Vec::new();
        draw_noise(&params, &mut rng, &mut noise);
        let (y, tape) = propagate_tape(x, &noise, &params).unwrap();
        assert!(tape.replays_exactly());
        assert_eq!(y, propagate_fixed(x, &noise, &params));
        for grad_y in [[1.0, 0.0], [0.0, 1.0], [0.3, -0.7]] {
            let analytic = backprop_channel(&tape, grad_y);
            let f = |re: f64, im: f64| {
                let y = propagate_fixed(ComplexSample::new(re, im), &noise, &params);
                grad_y[0] * y.re + grad_y[1] * y.im
            };
            let h = FD_STEP * x.norm().max(1e-3);
            let numeric = [
                (f(x.re + h, x.im) - f(x.re - h, x.im)) / (2.0 * h),
                (f(x.re, x.im + h) - f(x.re, x.im - h)) / (2.0 * h),
            ];
            let err = max_relative_error(&analytic, &numeric);
            assert!(err < 1e-6, "seed {seed}: {err}");
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn noiseless_magnitude_and_phase_law(
        r in 0.0f64..0.15,
        theta in 0.0f64..TAU,
        segments in 1usize..400,
        gamma in 0.0f64..3.0,
    ) {
        let params = ChannelParams { noise_power_w: 0.0, segments, gamma, ..ChannelParams::default() };
        let x = ComplexSample::from_polar(r, theta);
        let mut rng = stream(0, Domain::Channel, 0);
        let y = propagate(x, &params, &mut rng);
        if r > 0.0 {
            prop_assert!((y.norm() / x.norm() - 1.0).abs() <= 1e-12);
            let expected = params.link_length_km * gamma * r * r;
            prop_assert!(phase_error(y.arg() - x.arg(), expected) <= 1e-9);
        } else {
            prop_assert_eq!(y, ComplexSample::ZERO);
        }
    }

    #[test]
    fn channel_gradient_matches_finite_differences(
        k in prop::sample::select(vec![1usize, 5, 50]),
        p_dbm in -10.0f64..6.0,
        theta in 0.0f64..TAU,
        seed in any::<u32>(),
    ) {
        let params = ChannelParams { segments: k, ..ChannelParams::default() };
        let x = ComplexSample::from_polar(watts_from_dbm(p_dbm).sqrt(), theta);
        let err = channel_grad_check(&params, x, seed as u64).unwrap();
        prop_assert!(err < 1e-6, "error {}", err);
    }
}
