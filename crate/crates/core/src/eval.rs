//! Reference constellations and the Monte-Carlo measurements: symbol error
//! rate, achievable information rate of a trained autoencoder, and
//! decision-region rasters.

use alloc::vec::Vec;
use core::f64::consts::LN_2;

use crate::autoencoder::{AutoencoderModel, RxWorkspace};
use crate::channel::{propagate, ChannelParams, ComplexSample};
use crate::nn::POSTERIOR_FLOOR;
use crate::oracle::{chunk_count, chunk_len, Constellation, InfoSum, LikelihoodOracle};
use crate::rng::{derive_seed, stream, Domain, CHUNK};
use crate::{math, Error, Result};

/// Anything that maps a channel output to a message index.
pub trait Detector {
    fn m(&self) -> usize;
    fn detect(&self, y: ComplexSample) -> usize;
}

impl Detector for AutoencoderModel {
    fn m(&self) -> usize {
        AutoencoderModel::m(self)
    }

    fn detect(&self, y: ComplexSample) -> usize {
        let mut ws = RxWorkspace::default();
        let post = self.posterior_with(&mut ws, y).expect("receiver input is always 2-dimensional");
        crate::autoencoder::argmax(post)
    }
}

impl Detector for LikelihoodOracle {
    fn m(&self) -> usize {
        LikelihoodOracle::m(self)
    }

    fn detect(&self, y: ComplexSample) -> usize {
        self.ml_detect(y)
    }
}

/// Nearest constellation point; ties go to the lowest index.
#[derive(Debug, Clone)]
pub struct MinDistance<'a>(pub &'a Constellation);

impl Detector for MinDistance<'_> {
    fn m(&self) -> usize {
        self.0.m()
    }

    fn detect(&self, y: ComplexSample) -> usize {
        let mut best = 0;
        let mut best_d = f64::INFINITY;
        for (s, &p) in self.0.points().iter().enumerate() {
            let d = (y - p).norm_sqr();
            if d < best_d {
                best = s;
                best_d = d;
            }
        }
        best
    }
}

/// Always answers the same message.
#[derive(Debug, Clone, Copy)]
pub struct ConstantDetector {
    pub m: usize,
    pub message: usize,
}

impl Detector for ConstantDetector {
    fn m(&self) -> usize {
        self.m
    }

    fn detect(&self, _y: ComplexSample) -> usize {
        self.message
    }
}


fn gray_inverse(mut g: u32) -> u32 {
    let mut v = 0;
    while g != 0 {
        v ^= g;
        g >>= 1;
    }
    v
}

/// Square `m`-QAM with mean power `p_in_w`.
///
/// Point `s` carries the Gray label `s`: the high half of the bits selects the
/// in-phase level and the low half the quadrature level, each Gray-coded, so
/// horizontally or vertically adjacent points differ in one bit.
pub fn qam(m: usize, p_in_w: f64) -> Result<Constellation> {
    if !matches!(m, 4 | 16 | 64 | 256) {
        return Err(Error::InvalidParameter("QAM order must be 4, 16, 64 or 256"));
    }
    if !(p_in_w > 0.0 && p_in_w.is_finite()) {
        return Err(Error::InvalidParameter("input power must be positive"));
    }
    let side = math::sqrt(m as f64) as u32;
    let bits = side.trailing_zeros();
    let level = |g: u32| 2.0 * gray_inverse(g) as f64 - (side - 1) as f64;
    let points = (0..m as u32)
        .map(|label| ComplexSample::new(level(label >> bits), level(label & (side - 1))))
        .collect();
    Constellation::with_power(points, p_in_w)
}

/// Gray labels of [`qam`] points, i.e. the identity on indices, kept as a
/// separate function for export.
pub fn qam_labels(m: usize) -> Vec<u32> {
    (0..m as u32).collect()
}

/// Symbol-error count over a balanced Monte-Carlo run.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SerEstimate {
    pub errors: u64,
    pub n: u64,
}

impl SerEstimate {
    pub fn merge(self, other: SerEstimate) -> SerEstimate {
        SerEstimate { errors: self.errors + other.errors, n: self.n + other.n }
    }

    pub fn value(&self) -> f64 {
        if self.n == 0 {
            0.0
        } else {
            self.errors as f64 / self.n as f64
        }
    }

    /// Binomial standard error `sqrt(p (1 - p) / n)`.
    pub fn std_error(&self) -> f64 {
        if self.n == 0 {
            return 0.0;
        }
        let p = self.value();
        math::sqrt(p * (1.0 - p) / self.n as f64)
    }
}

/// Errors within one chunk; sample `i` sends message `i mod m`.
pub fn ser_chunk<D: Detector + ?Sized>(
    symbols: &Constellation,
    detector: &D,
    params: &ChannelParams,
    n_samples: usize,
    seed: u64,
    chunk: usize,
) -> SerEstimate {
    let m = symbols.m();
    let mut rng = stream(seed, Domain::SymbolErrors, chunk as u64);
    let start = chunk * CHUNK;
    let len = chunk_len(n_samples, chunk);
    let mut errors = 0;
    for i in start..start + len {
        let s = i % m;
        let y = propagate(symbols.points()[s], params, &mut rng);
        if detector.detect(y) != s {
            errors += 1;
        }
    }
    SerEstimate { errors, n: len as u64 }
}

/// Monte-Carlo symbol error rate `P(s != s_hat)` with balanced messages.
pub fn ser<D: Detector + ?Sized>(
    symbols: &Constellation,
    detector: &D,
    params: &ChannelParams,
    n_samples: usize,
    seed: u64,
) -> Result<SerEstimate> {
    params.validate()?;
    if detector.m() != symbols.m() {
        return Err(Error::DimensionMismatch { expected: symbols.m(), found: detector.m() });
    }
    Ok((0..chunk_count(n_samples))
        .map(|c| ser_chunk(symbols, detector, params, n_samples, seed, c))
        .fold(SerEstimate::default(), SerEstimate::merge))
}

/// The achievable-rate estimator `log2 m + mean(log2 f)` over posteriors of
/// the transmitted message, with `f` floored at [`POSTERIOR_FLOOR`].
pub fn air_from_posteriors(m: usize, posteriors: impl IntoIterator<Item = f64>) -> f64 {
    let mut acc = InfoSum::default();
    for f in posteriors {
        acc.push(air_term(m, f));
    }
    acc.mean()
}

#[inline]
fn air_term(m: usize, f: f64) -> f64 {
    math::log2(m as f64) + math::ln(f.clamp(POSTERIOR_FLOOR, 1.0)) / LN_2
}

/// Per-sample rate terms of one chunk of the achievable-rate estimate.
pub fn air_chunk(model: &AutoencoderModel, symbols: &Constellation, n_samples: usize, seed: u64, chunk: usize) -> InfoSum {
    let m = model.m();
    let mut rng = stream(seed, Domain::InformationRate, chunk as u64);
    let mut ws = RxWorkspace::default();
    let mut acc = InfoSum::default();
    let start = chunk * CHUNK;
    for i in start..start + chunk_len(n_samples, chunk) {
        let s = i % m;
        let y = propagate(symbols.points()[s], model.channel(), &mut rng);
        let post = model.posterior_with(&mut ws, y).expect("receiver input is always 2-dimensional");
        acc.push(air_term(m, post[s]));
    }
    acc
}

/// Achievable information rate (bits per channel use) of the autoencoder
/// with its receiver posterior as the auxiliary channel, on fresh noise.
pub fn air(model: &AutoencoderModel, n_samples: usize, seed: u64) -> Result<InfoSum> {
    let symbols = Constellation::new(model.constellation()?)?;
    Ok((0..chunk_count(n_samples))
        .map(|c| air_chunk(model, &symbols, n_samples, seed, c))
        .fold(InfoSum::default(), InfoSum::merge))
}

/// Square window of the received-signal plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RasterSpec {
    pub center: ComplexSample,
    pub half_width: f64,
    /// Pixels per side.
    pub resolution: usize,
}

impl RasterSpec {
    /// Window of half-width `3 sqrt(P_in)` around the origin.
    pub fn for_power(input_power_w: f64, resolution: usize) -> Self {
        RasterSpec { center: ComplexSample::ZERO, half_width: 3.0 * math::sqrt(input_power_w), resolution }
    }

    pub fn validate(&self) -> Result<()> {
        if self.resolution < 16 {
            return Err(Error::InvalidParameter("raster resolution must be at least 16"));
        }
        if !(self.half_width > 0.0 && self.half_width.is_finite()) {
            return Err(Error::InvalidParameter("raster half-width must be positive"));
        }
        Ok(())
    }

    /// Center of pixel `(row, col)`; row 0 is the top (largest imaginary part).
    pub fn pixel_center(&self, row: usize, col: usize) -> ComplexSample {
        let pixel = 2.0 * self.half_width / self.resolution as f64;
        ComplexSample::new(
            self.center.re - self.half_width + (col as f64 + 0.5) * pixel,
            self.center.im + self.half_width - (row as f64 + 0.5) * pixel,
        )
    }
}

/// Detected message per pixel, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelGrid {
    pub resolution: usize,
    pub labels: Vec<usize>,
}

impl LabelGrid {
    pub fn get(&self, row: usize, col: usize) -> usize {
        self.labels[row * self.resolution + col]
    }
}

/// Labels of one raster row.
pub fn region_row<D: Detector + ?Sized>(detector: &D, spec: &RasterSpec, row: usize) -> Vec<usize> {
    (0..spec.resolution).map(|col| detector.detect(spec.pixel_center(row, col))).collect()
}

/// Rasterize a detector's decision regions over `spec`.
pub fn decision_regions<D: Detector + ?Sized>(detector: &D, spec: &RasterSpec) -> Result<LabelGrid> {
    spec.validate()?;
    let labels = (0..spec.resolution).flat_map(|row| region_row(detector, spec, row)).collect();
    Ok(LabelGrid { resolution: spec.resolution, labels })
}

/// Fraction of pixels whose center lies within `radius` of the origin on which
/// two rasters of the same window agree.
pub fn region_agreement(a: &LabelGrid, b: &LabelGrid, spec: &RasterSpec, radius: f64) -> Result<f64> {
    if a.resolution != spec.resolution || b.resolution != spec.resolution {
        return Err(Error::DimensionMismatch { expected: spec.resolution, found: a.resolution.max(b.resolution) });
    }
    let (mut inside, mut same) = (0u64, 0u64);
    for row in 0..spec.resolution {
        for col in 0..spec.resolution {
            if spec.pixel_center(row, col).norm() <= radius {
                inside += 1;
                if a.get(row, col) == b.get(row, col) {
                    same += 1;
                }
            }
        }
    }
    if inside == 0 {
        return Err(Error::InvalidParameter("no pixel lies within the radius"));
    }
    Ok(same as f64 / inside as f64)
}

/// Smallest radius `r` such that samples with `|y| <= r` carry `fraction` of
/// the total energy `sum |y|^2`.
pub fn energy_radius(samples: &[ComplexSample], fraction: f64) -> f64 {
    let mut powers: Vec<f64> = samples.iter().map(|s| s.norm_sqr()).collect();
    powers.sort_by(f64::total_cmp);
    let total: f64 = powers.iter().sum();
    let mut acc = 0.0;
    for &p in &powers {
        acc += p;
        if acc >= fraction * total {
            return math::sqrt(p);
        }
    }
    powers.last().map_or(0.0, |&p| math::sqrt(p))
}

/// Channel outputs for a balanced draw over `symbols`.
pub fn output_samples(symbols: &Constellation, params: &ChannelParams, n: usize, seed: u64) -> Vec<ComplexSample> {
    let mut rng = stream(seed, Domain::Channel, 0);
    (0..n).map(|i| propagate(symbols.points()[i % symbols.m()], params, &mut rng)).collect()
}

/// What a sweep row measures.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Metric {
    Ser,
    Air,
    Mi,
}

impl Metric {
    pub fn name(self) -> &'static str {
        match self {
            Metric::Ser => "SER",
            Metric::Air => "AIR",
            Metric::Mi => "MI",
        }
    }
}

/// One measured point of a power sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepResult {
    pub power_dbm: f64,
    pub metric: Metric,
    pub value: f64,
    pub n_samples: u64,
    pub seed: u64,
}

/// Seed used for the `index`-th power point of a sweep.
pub fn sweep_seed(seed: u64, index: usize) -> u64 {
    derive_seed(seed, Domain::Sweep, index as u64)
}

/// Evaluate `measure(power_dbm, seed)` at every power point, in order.
pub fn sweep<F>(powers: &[f64], metric: Metric, n_samples: usize, seed: u64, mut measure: F) -> Result<Vec<SweepResult>>
where
    F: FnMut(f64, u64) -> Result<f64>,
{
    powers
        .iter()
        .enumerate()
        .map(|(i, &power_dbm)| {
            let point_seed = sweep_seed(seed, i);
            let value = measure(power_dbm, point_seed)?;
            Ok(SweepResult { power_dbm, metric, value, n_samples: n_samples as u64, seed: point_seed })
        })
        .collect()
}

/// Inclusive arithmetic power grid `start, start + step, ..., stop`.
pub fn power_grid(start: f64, step: f64, stop: f64) -> Result<Vec<f64>> {
    if !(step > 0.0) || !start.is_finite() || !stop.is_finite() || stop < start {
        return Err(Error::InvalidParameter("power grid needs start <= stop and a positive step"));
    }
    let count = math::floor((stop - start) / step + 1e-9) as usize + 1;
    Ok((0..count).map(|i| start + i as f64 * step).collect())
}

/// Index of the smallest value; ties go to the first.
pub fn argmin(values: &[f64]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, &v) in values.iter().enumerate() {
        if best.map_or(true, |b| v < values[b]) {
            best = Some(i);
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::watts_from_dbm;

    #[test]
    fn qpsk_geometry() {
        let c = qam(4, 1e-3).unwrap();
        let a = 5e-4f64.sqrt();
        for p in c.points() {
            assert!((p.re.abs() - a).abs() < 1e-15 && (p.im.abs() - a).abs() < 1e-15);
        }
        assert!((c.mean_power() - 1e-3).abs() / 1e-3 < 1e-12);
    }

    #[test]
    fn sixteen_qam_rings() {
        let c = qam(16, 1.0).unwrap();
        let mut rings: Vec<(f64, usize)> = Vec::new();
        for p in c.points() {
            let r = p.norm_sqr();
            match rings.iter_mut().find(|(v, _)| (v - r).abs() < 1e-9) {
                Some(entry) => entry.1 += 1,
                None => rings.push((r, 1)),
            }
        }
        rings.sort_by(|a, b| a.0.total_cmp(&b.0));
        assert_eq!(rings.iter().map(|r| r.1).collect::<Vec<_>>(), vec![4, 8, 4]);
    }

    #[test]
    fn qam_power_and_gray_neighbours() {
        for m in [4, 16, 64, 256] {
            let c = qam(m, 2.5e-3).unwrap();
            assert!((c.mean_power() - 2.5e-3).abs() / 2.5e-3 < 1e-12);
            let dmin = 2.0 * (2.5e-3 * 3.0 / (2.0 * (m as f64 - 1.0))).sqrt();
            for (a, pa) in c.points().iter().enumerate() {
                for (b, pb) in c.points().iter().enumerate() {
                    if ((*pa - *pb).norm() - dmin).abs() < 1e-12 {
                        assert_eq!((a ^ b).count_ones(), 1, "m={m} {a} {b}");
                    }
                }
            }
        }
        assert!(qam(8, 1.0).is_err());
        assert_eq!(qam_labels(4), vec![0, 1, 2, 3]);
    }

    #[test]
    fn noiseless_ser_is_zero() {
        let c = qam(16, 1e-3).unwrap();
        let params = ChannelParams { noise_power_w: 0.0, ..ChannelParams::default() }.linear();
        assert_eq!(ser(&c, &MinDistance(&c), &params, 10_000, 1).unwrap().errors, 0);
    }

    #[test]
    fn constant_detector_ser() {
        let c = qam(16, 1e-3).unwrap();
        let det = ConstantDetector { m: 16, message: 0 };
        let est = ser(&c, &det, &ChannelParams::default(), 16_000, 3).unwrap();
        assert_eq!(est.value(), 15.0 / 16.0);
    }

    #[test]
    fn air_estimator_closed_forms() {
        assert_eq!(air_from_posteriors(16, [1.0; 100]), 4.0);
        assert_eq!(air_from_posteriors(16, [1.0 / 16.0; 100]), 0.0);
        let half: Vec<f64> = (0..100).map(|i| if i % 2 == 0 { 1.0 } else { 1.0 / 16.0 }).collect();
        assert!((air_from_posteriors(16, half) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn qpsk_min_distance_regions_are_quadrants() {
        let c = qam(4, 1e-3).unwrap();
        let spec = RasterSpec::for_power(1e-3, 32);
        let grid = decision_regions(&MinDistance(&c), &spec).unwrap();
        for (row, col) in [(0, 0), (0, 31), (31, 0), (31, 31)] {
            let y = spec.pixel_center(row, col);
            let s = grid.get(row, col);
            let p = c.points()[s];
            assert_eq!(p.re.signum(), y.re.signum());
            assert_eq!(p.im.signum(), y.im.signum());
        }
        assert_eq!(grid.labels.len(), 32 * 32);
    }

    #[test]
    fn constant_detector_regions_are_uniform() {
        let spec = RasterSpec::for_power(1e-3, 16);
        let grid = decision_regions(&ConstantDetector { m: 4, message: 2 }, &spec).unwrap();
        assert!(grid.labels.iter().all(|&l| l == 2));
        assert!(RasterSpec { resolution: 8, ..spec }.validate().is_err());
        assert_eq!(region_agreement(&grid, &grid, &spec, 1.0).unwrap(), 1.0);
    }

    #[test]
    fn energy_radius_of_single_ring() {
        let samples: Vec<_> = (0..100).map(|i| ComplexSample::from_polar(2.0, i as f64)).collect();
        assert!((energy_radius(&samples, 0.99) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn empty_sweep() {
        let rows = sweep(&[], Metric::Ser, 10, 0, |_, _| Ok(0.0)).unwrap();
        assert!(rows.is_empty());
    }

    #[test]
    fn power_grid_is_inclusive() {
        let g = power_grid(-15.0, 1.0, 10.0).unwrap();
        assert_eq!(g.len(), 26);
        assert_eq!(g[25], 10.0);
        assert_eq!(power_grid(0.0, 0.5, 0.0).unwrap(), vec![0.0]);
        assert!(power_grid(1.0, 1.0, 0.0).is_err());
        assert_eq!(argmin(&[3.0, 1.0, 1.0, 2.0]), Some(1));
    }

    #[test]
    fn ser_estimates_are_reproducible() {
        let c = qam(16, watts_from_dbm(0.0)).unwrap();
        let p = ChannelParams::default();
        let a = ser(&c, &MinDistance(&c), &p, 10_000, 9).unwrap();
        let b = ser(&c, &MinDistance(&c), &p, 10_000, 9).unwrap();
        assert_eq!(a, b);
    }
}
