//! Sampled stand-in for the channel law `p(y | x)`.
//!
//! For every constellation point the channel is simulated `S` times and a
//! two-dimensional Gaussian kernel density estimate is fitted to the output
//! cloud. The kernel covariance is `h^2 V` with `V` the cloud's sample
//! covariance and `h = S^(-1/6)` (Silverman's rule in two dimensions), so the
//! estimate follows elongated nonlinear-phase-noise clouds.
//!
//! Evaluation works in whitened coordinates `z = L^-1 (y - mean)` with
//! `V = L L^T`, where the kernel is isotropic. The estimate is precomputed on
//! a grid by linear binning and a separable Gaussian convolution, and read
//! back by bilinear interpolation of the log-density. Beyond the grid, or
//! where the estimate underflows, a moment-matched Gaussian shifted down by
//! [`TAIL_LOG_PENALTY`] keeps far-field decisions well defined and every
//! density strictly positive. [`SymbolDensity::log_density_exact`] evaluates
//! the kernel sum directly and is used to check the grid.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::{LN_2, TAU};

use crate::channel::{propagate, ChannelParams, ComplexSample};
use crate::rng::{stream, Domain, CHUNK};
use crate::{math, Error, Result};

/// Minimum number of channel samples per symbol.
pub const MIN_SAMPLES: usize = 1000;
/// Grid spacing in units of the bandwidth.
const CELLS_PER_BANDWIDTH: f64 = 8.0;
/// Kernel truncation radius (and grid margin) in units of the bandwidth.
const KERNEL_RADIUS: f64 = 12.0;
const MAX_NODES: usize = 1024;
/// Log-density offset of the far-field Gaussian; below any representable
/// kernel-sum value.
pub const TAIL_LOG_PENALTY: f64 = 1000.0;

/// An `m`-point input alphabet with uniform prior.
#[derive(Debug, Clone, PartialEq)]
pub struct Constellation {
    points: Vec<ComplexSample>,
}

impl Constellation {
    pub fn new(points: Vec<ComplexSample>) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::InvalidParameter("constellation needs at least 2 points"));
        }
        if points.iter().any(|p| !p.is_finite()) {
            return Err(Error::InvalidParameter("constellation points must be finite"));
        }
        Ok(Constellation { points })
    }

    /// Points rescaled to mean power `power_w`.
    pub fn with_power(points: Vec<ComplexSample>, power_w: f64) -> Result<Self> {
        let c = Self::new(points)?;
        let mean = c.mean_power();
        if !(mean > 0.0) {
            return Err(Error::ZeroPower);
        }
        let scale = math::sqrt(power_w / mean);
        Self::new(c.points.into_iter().map(|p| p * scale).collect())
    }

    pub fn points(&self) -> &[ComplexSample] {
        &self.points
    }

    pub fn m(&self) -> usize {
        self.points.len()
    }

    pub fn mean_power(&self) -> f64 {
        self.points.iter().map(|p| p.norm_sqr()).sum::<f64>() / self.points.len() as f64
    }
}

#[derive(Debug, Clone, PartialEq)]
struct DensityGrid {
    origin: [f64; 2],
    cell: f64,
    nx: usize,
    ny: usize,
    /// Row-major over `(ix, iy)` with `iy` fastest; `-inf` where zero.
    log_density: Vec<f64>,
}

/// Kernel density estimate of one symbol's output cloud.
#[derive(Debug, Clone, PartialEq)]
pub struct SymbolDensity {
    samples: Vec<ComplexSample>,
    mean: ComplexSample,
    /// Lower Cholesky factor `[l11, l21, l22]` of the cloud covariance.
    chol: [f64; 3],
    bandwidth: f64,
    /// `ln` of the kernel normalization `1 / (n 2 pi h^2 det L)`.
    log_norm: f64,
    grid: DensityGrid,
}

impl SymbolDensity {
    /// Fit the estimate to a sample cloud.
    pub fn fit(samples: Vec<ComplexSample>) -> Result<Self> {
        let n = samples.len();
        if n < 2 {
            return Err(Error::InvalidParameter("density needs at least 2 samples"));
        }
        if samples.iter().any(|s| !s.is_finite()) {
            return Err(Error::InvalidParameter("samples must be finite"));
        }
        let nf = n as f64;
        let mean = samples.iter().fold(ComplexSample::ZERO, |acc, &s| acc + s) * (1.0 / nf);
        let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
        for s in &samples {
            let d = *s - mean;
            sxx += d.re * d.re;
            sxy += d.re * d.im;
            syy += d.im * d.im;
        }
        let denom = nf - 1.0;
        let (mut sxx, sxy, mut syy) = (sxx / denom, sxy / denom, syy / denom);
        // Ridge keeps degenerate (noiseless) clouds invertible.
        let ridge = f64::max(1e-9 * (sxx + syy), 1e-30);
        sxx += ridge;
        syy += ridge;
        let l11 = math::sqrt(sxx);
        let l21 = sxy / l11;
        let l22 = math::sqrt(f64::max(syy - l21 * l21, ridge));
        let bandwidth = math::pow(nf, -1.0 / 6.0);
        let log_norm = -math::ln(nf * TAU * bandwidth * bandwidth * l11 * l22);

        let mut density = SymbolDensity {
            samples,
            mean,
            chol: [l11, l21, l22],
            bandwidth,
            log_norm,
            grid: DensityGrid { origin: [0.0; 2], cell: 1.0, nx: 0, ny: 0, log_density: Vec::new() },
        };
        density.grid = density.build_grid();
        Ok(density)
    }

    pub fn samples(&self) -> &[ComplexSample] {
        &self.samples
    }

    pub fn sample_count(&self) -> usize {
        self.samples.len()
    }

    /// Silverman factor `h`; the kernel covariance is `h^2` times the cloud
    /// covariance.
    pub fn bandwidth(&self) -> f64 {
        self.bandwidth
    }

    pub fn mean(&self) -> ComplexSample {
        self.mean
    }

    /// Sample covariance `[var_re, cov, var_im]` (including the ridge).
    pub fn covariance(&self) -> [f64; 3] {
        let [l11, l21, l22] = self.chol;
        [l11 * l11, l11 * l21, l21 * l21 + l22 * l22]
    }

    #[inline]
    fn whiten(&self, y: ComplexSample) -> [f64; 2] {
        let [l11, l21, l22] = self.chol;
        let z1 = (y.re - self.mean.re) / l11;
        let z2 = (y.im - self.mean.im - l21 * z1) / l22;
        [z1, z2]
    }

    #[inline]
    fn unwhiten(&self, z: [f64; 2]) -> ComplexSample {
        let [l11, l21, l22] = self.chol;
        ComplexSample::new(self.mean.re + l11 * z[0], self.mean.im + l21 * z[0] + l22 * z[1])
    }

    fn build_grid(&self) -> DensityGrid {
        let h = self.bandwidth;
        let zs: Vec<[f64; 2]> = self.samples.iter().map(|&s| self.whiten(s)).collect();
        let mut lo = [f64::INFINITY; 2];
        let mut hi = [f64::NEG_INFINITY; 2];
        for z in &zs {
            for d in 0..2 {
                lo[d] = lo[d].min(z[d]);
                hi[d] = hi[d].max(z[d]);
            }
        }
        let margin = KERNEL_RADIUS * h;
        let span = f64::max(hi[0] - lo[0], hi[1] - lo[1]) + 2.0 * margin;
        let cell = f64::max(h / CELLS_PER_BANDWIDTH, span / (MAX_NODES - 1) as f64);
        let origin = [lo[0] - margin, lo[1] - margin];
        let nodes = |d: usize| (math::ceil((hi[d] - lo[d] + 2.0 * margin) / cell) as usize + 1).min(MAX_NODES);
        let (nx, ny) = (nodes(0), nodes(1));

        // Linear binning.
        let mut counts = vec![0.0; nx * ny];
        for z in &zs {
            let fx = (z[0] - origin[0]) / cell;
            let fy = (z[1] - origin[1]) / cell;
            let ix = (math::floor(fx) as usize).min(nx - 2);
            let iy = (math::floor(fy) as usize).min(ny - 2);
            let tx = fx - ix as f64;
            let ty = fy - iy as f64;
            counts[ix * ny + iy] += (1.0 - tx) * (1.0 - ty);
            counts[ix * ny + iy + 1] += (1.0 - tx) * ty;
            counts[(ix + 1) * ny + iy] += tx * (1.0 - ty);
            counts[(ix + 1) * ny + iy + 1] += tx * ty;
        }

        let radius = math::ceil(KERNEL_RADIUS * h / cell) as usize;
        let taps: Vec<f64> = (0..=radius)
            .map(|i| {
                let d = i as f64 * cell / h;
                math::exp(-0.5 * d * d)
            })
            .collect();

        // Separable convolution: along iy, then along ix.
        let mut pass = vec![0.0; nx * ny];
        for ix in 0..nx {
            let row = &counts[ix * ny..(ix + 1) * ny];
            let out = &mut pass[ix * ny..(ix + 1) * ny];
            for (iy, &c) in row.iter().enumerate() {
                if c == 0.0 {
                    continue;
                }
                let a = iy.saturating_sub(radius);
                let b = (iy + radius).min(ny - 1);
                for (j, o) in out[a..=b].iter_mut().enumerate() {
                    *o += c * taps[(a + j).abs_diff(iy)];
                }
            }
        }
        let mut smooth = vec![0.0; nx * ny];
        for ix in 0..nx {
            let a = ix.saturating_sub(radius);
            let b = (ix + radius).min(nx - 1);
            for jx in a..=b {
                let w = taps[jx.abs_diff(ix)];
                let src = &pass[jx * ny..(jx + 1) * ny];
                let dst = &mut smooth[ix * ny..(ix + 1) * ny];
                for (d, &s) in dst.iter_mut().zip(src) {
                    *d += w * s;
                }
            }
        }
        let log_density = smooth
            .into_iter()
            .map(|v| if v > 0.0 { math::ln(v) + self.log_norm } else { f64::NEG_INFINITY })
            .collect();
        DensityGrid { origin, cell, nx, ny, log_density }
    }

    /// Log of the moment-matched Gaussian `N(mean, (1 + h^2) V)`.
    fn gaussian_log_density(&self, z: [f64; 2]) -> f64 {
        let s = 1.0 + self.bandwidth * self.bandwidth;
        let [l11, _, l22] = self.chol;
        -(z[0] * z[0] + z[1] * z[1]) / (2.0 * s) - math::ln(TAU * s * l11 * l22)
    }

    /// Natural log of the estimated density at `y`.
    pub fn log_density(&self, y: ComplexSample) -> f64 {
        let z = self.whiten(y);
        let g = &self.grid;
        let fx = (z[0] - g.origin[0]) / g.cell;
        let fy = (z[1] - g.origin[1]) / g.cell;
        if fx >= 0.0 && fy >= 0.0 && fx <= (g.nx - 1) as f64 && fy <= (g.ny - 1) as f64 {
            let ix = (math::floor(fx) as usize).min(g.nx - 2);
            let iy = (math::floor(fy) as usize).min(g.ny - 2);
            let tx = fx - ix as f64;
            let ty = fy - iy as f64;
            let v00 = g.log_density[ix * g.ny + iy];
            let v01 = g.log_density[ix * g.ny + iy + 1];
            let v10 = g.log_density[(ix + 1) * g.ny + iy];
            let v11 = g.log_density[(ix + 1) * g.ny + iy + 1];
            if v00.is_finite() && v01.is_finite() && v10.is_finite() && v11.is_finite() {
                return (1.0 - tx) * ((1.0 - ty) * v00 + ty * v01) + tx * ((1.0 - ty) * v10 + ty * v11);
            }
        }
        self.gaussian_log_density(z) - TAIL_LOG_PENALTY
    }

    /// Log-density by direct summation over every sample.
    pub fn log_density_exact(&self, y: ComplexSample) -> f64 {
        let z = self.whiten(y);
        let inv = 1.0 / (2.0 * self.bandwidth * self.bandwidth);
        let exps = self.samples.iter().map(|&s| {
            let zi = self.whiten(s);
            let (a, b) = (z[0] - zi[0], z[1] - zi[1]);
            -(a * a + b * b) * inv
        });
        math::log_sum_exp(exps) + self.log_norm
    }

    /// Local maximum of the kernel estimate reached by mean-shift iterations
    /// from the sample mean.
    pub fn mode(&self) -> ComplexSample {
        let zs: Vec<[f64; 2]> = self.samples.iter().map(|&s| self.whiten(s)).collect();
        let inv = 1.0 / (2.0 * self.bandwidth * self.bandwidth);
        let mut z = [0.0, 0.0];
        for _ in 0..500 {
            let (mut w_sum, mut a, mut b) = (0.0, 0.0, 0.0);
            for zi in &zs {
                let (dx, dy) = (z[0] - zi[0], z[1] - zi[1]);
                let w = math::exp(-(dx * dx + dy * dy) * inv);
                w_sum += w;
                a += w * zi[0];
                b += w * zi[1];
            }
            if w_sum == 0.0 {
                break;
            }
            let next = [a / w_sum, b / w_sum];
            let step = (next[0] - z[0]).abs() + (next[1] - z[1]).abs();
            z = next;
            if step < 1e-12 {
                break;
            }
        }
        self.unwhiten(z)
    }
}

/// Per-symbol density estimates of one constellation over one channel.
#[derive(Debug, Clone, PartialEq)]
pub struct LikelihoodOracle {
    densities: Vec<SymbolDensity>,
    params: ChannelParams,
}

/// `S` channel outputs for one input point, drawn from the stream of symbol
/// `index`.
pub fn symbol_cloud(
    point: ComplexSample,
    params: &ChannelParams,
    samples: usize,
    seed: u64,
    index: usize,
) -> Vec<ComplexSample> {
    let mut rng = stream(seed, Domain::OracleBuild, index as u64);
    (0..samples).map(|_| propagate(point, params, &mut rng)).collect()
}

impl LikelihoodOracle {
    /// Simulate `samples` outputs per constellation point and fit each cloud.
    pub fn build(constellation: &Constellation, params: &ChannelParams, samples: usize, seed: u64) -> Result<Self> {
        params.validate()?;
        if samples < MIN_SAMPLES {
            return Err(Error::InvalidParameter("oracle needs at least 1000 samples per symbol"));
        }
        let densities = constellation
            .points()
            .iter()
            .enumerate()
            .map(|(s, &p)| SymbolDensity::fit(symbol_cloud(p, params, samples, seed, s)))
            .collect::<Result<Vec<_>>>()?;
        Self::from_densities(densities, *params)
    }

    /// Oracle from already fitted per-symbol estimates.
    pub fn from_densities(densities: Vec<SymbolDensity>, params: ChannelParams) -> Result<Self> {
        if densities.len() < 2 {
            return Err(Error::InvalidParameter("oracle needs at least 2 symbols"));
        }
        Ok(LikelihoodOracle { densities, params })
    }

    pub fn m(&self) -> usize {
        self.densities.len()
    }

    pub fn densities(&self) -> &[SymbolDensity] {
        &self.densities
    }

    pub fn channel(&self) -> &ChannelParams {
        &self.params
    }

    /// Smallest per-symbol sample count.
    pub fn sample_count(&self) -> usize {
        self.densities.iter().map(SymbolDensity::sample_count).min().unwrap_or(0)
    }

    pub fn log_likelihood(&self, s: usize, y: ComplexSample) -> Result<f64> {
        self.densities
            .get(s)
            .map(|d| d.log_density(y))
            .ok_or(Error::IndexOutOfRange { index: s, m: self.m() })
    }

    /// Estimated `p(y | x_s)`; always strictly positive.
    pub fn likelihood(&self, s: usize, y: ComplexSample) -> Result<f64> {
        Ok(math::exp(self.log_likelihood(s, y)?).max(f64::MIN_POSITIVE))
    }

    /// Log-likelihoods of every symbol at `y`.
    pub fn log_likelihoods(&self, y: ComplexSample, out: &mut Vec<f64>) {
        out.clear();
        out.extend(self.densities.iter().map(|d| d.log_density(y)));
    }

    /// Maximum-likelihood decision; ties go to the lowest index.
    pub fn ml_detect(&self, y: ComplexSample) -> usize {
        let mut best = 0;
        let mut best_ll = self.densities[0].log_density(y);
        for (s, d) in self.densities.iter().enumerate().skip(1) {
            let ll = d.log_density(y);
            if ll > best_ll {
                best = s;
                best_ll = ll;
            }
        }
        best
    }
}

/// Running sum of per-sample information terms (bits).
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct InfoSum {
    pub n: u64,
    pub sum: f64,
    pub sum_sq: f64,
}

impl InfoSum {
    #[inline]
    pub fn push(&mut self, v: f64) {
        self.n += 1;
        self.sum += v;
        self.sum_sq += v * v;
    }

    pub fn merge(self, other: InfoSum) -> InfoSum {
        InfoSum { n: self.n + other.n, sum: self.sum + other.sum, sum_sq: self.sum_sq + other.sum_sq }
    }

    pub fn mean(&self) -> f64 {
        if self.n == 0 {
            0.0
        } else {
            self.sum / self.n as f64
        }
    }

    /// Standard error of the mean.
    pub fn std_error(&self) -> f64 {
        if self.n < 2 {
            return 0.0;
        }
        let n = self.n as f64;
        let var = (self.sum_sq - self.sum * self.sum / n) / (n - 1.0);
        math::sqrt(var.max(0.0) / n)
    }
}

/// Number of `CHUNK`-sized blocks covering `n` samples.
pub fn chunk_count(n: usize) -> usize {
    n.div_ceil(CHUNK)
}

/// Length of chunk `chunk` of an `n`-sample run.
pub fn chunk_len(n: usize, chunk: usize) -> usize {
    CHUNK.min(n - chunk * CHUNK)
}

/// Information terms of one chunk of the mutual-information estimate.
///
/// Sample `i` (global index) sends point `i mod m`.
pub fn mutual_information_chunk(
    oracle: &LikelihoodOracle,
    constellation: &Constellation,
    params: &ChannelParams,
    n_samples: usize,
    seed: u64,
    chunk: usize,
) -> InfoSum {
    let m = constellation.m();
    let ln_m = math::ln(m as f64);
    let mut rng = stream(seed, Domain::MutualInformation, chunk as u64);
    let mut ll = Vec::with_capacity(m);
    let mut acc = InfoSum::default();
    let start = chunk * CHUNK;
    for i in start..start + chunk_len(n_samples, chunk) {
        let s = i % m;
        let y = propagate(constellation.points()[s], params, &mut rng);
        oracle.log_likelihoods(y, &mut ll);
        let log_py = math::log_sum_exp(ll.iter().copied()) - ln_m;
        acc.push((ll[s] - log_py) / LN_2);
    }
    acc
}

/// Monte-Carlo mutual information `I(X; Y)` in bits under a uniform input,
/// with the oracle standing in for `p(y | x)` in both numerator and
/// denominator.
pub fn mutual_information(
    oracle: &LikelihoodOracle,
    constellation: &Constellation,
    params: &ChannelParams,
    n_samples: usize,
    seed: u64,
) -> Result<InfoSum> {
    if oracle.m() != constellation.m() {
        return Err(Error::DimensionMismatch { expected: constellation.m(), found: oracle.m() });
    }
    Ok((0..chunk_count(n_samples))
        .map(|c| mutual_information_chunk(oracle, constellation, params, n_samples, seed, c))
        .fold(InfoSum::default(), InfoSum::merge))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::watts_from_dbm;
    use crate::rng::standard_normal_pair;

    fn gaussian_cloud(n: usize, sigma: [f64; 2], seed: u64) -> Vec<ComplexSample> {
        let mut rng = stream(seed, Domain::Channel, 99);
        (0..n)
            .map(|_| {
                let (a, b) = standard_normal_pair(&mut rng);
                ComplexSample::new(1.0 + sigma[0] * a, -2.0 + sigma[1] * b)
            })
            .collect()
    }

    #[test]
    fn constellation_validation() {
        assert!(Constellation::new(vec![ComplexSample::ZERO]).is_err());
        assert_eq!(
            Constellation::with_power(vec![ComplexSample::ZERO; 2], 1.0).unwrap_err(),
            Error::ZeroPower
        );
        let c = Constellation::with_power(vec![ComplexSample::new(3.0, 0.0), ComplexSample::new(0.0, 1.0)], 2e-3)
            .unwrap();
        assert!((c.mean_power() - 2e-3).abs() / 2e-3 < 1e-12);
    }

    #[test]
    fn grid_matches_direct_summation() {
        let d = SymbolDensity::fit(gaussian_cloud(5000, [0.3, 0.1], 1)).unwrap();
        let peak = d.log_density_exact(d.mean());
        let (mut bulk, mut tail): (f64, f64) = (0.0, 0.0);
        for i in -15..=15 {
            for j in -15..=15 {
                let y = ComplexSample::new(1.0 + 0.08 * i as f64, -2.0 + 0.03 * j as f64);
                let exact = d.log_density_exact(y);
                let err = (d.log_density(y) - exact).abs();
                if exact > peak - 12.0 {
                    bulk = bulk.max(err);
                } else if exact > peak - 40.0 {
                    tail = tail.max(err);
                }
            }
        }
        // Binning error grows with distance from the cloud; in the tail the
        // log-density is steep, so a fraction of a nat moves a decision
        // boundary by a small fraction of the bandwidth.
        assert!(bulk < 0.04, "bulk log error {bulk}");
        assert!(tail < 0.2, "tail log error {tail}");
    }

    #[test]
    fn density_is_positive_and_deterministic() {
        let d = SymbolDensity::fit(gaussian_cloud(2000, [0.2, 0.2], 2)).unwrap();
        let oracle = LikelihoodOracle::from_densities(vec![d.clone(), d], ChannelParams::default()).unwrap();
        for y in [ComplexSample::new(1.0, -2.0), ComplexSample::new(50.0, 50.0), ComplexSample::new(-1e6, 0.0)] {
            let a = oracle.likelihood(0, y).unwrap();
            assert!(a > 0.0);
            assert_eq!(a, oracle.likelihood(0, y).unwrap());
        }
        assert_eq!(oracle.likelihood(2, ComplexSample::ZERO).unwrap_err(), Error::IndexOutOfRange { index: 2, m: 2 });
    }

    #[test]
    fn centroid_beats_five_sigma_offset() {
        let d = SymbolDensity::fit(gaussian_cloud(20_000, [0.2, 0.2], 3)).unwrap();
        let c = d.mean();
        assert!(d.log_density(c) >= d.log_density(c + ComplexSample::new(1.0, 0.0)));
        assert!(d.log_density(c) >= d.log_density(c + ComplexSample::new(0.0, -1.0)));
    }

    #[test]
    fn far_field_falls_back_to_gaussian_ranking() {
        let d = SymbolDensity::fit(gaussian_cloud(2000, [0.2, 0.2], 4)).unwrap();
        let near = d.log_density(ComplexSample::new(30.0, -2.0));
        let far = d.log_density(ComplexSample::new(60.0, -2.0));
        assert!(near < -TAIL_LOG_PENALTY + 10.0);
        assert!(far < near);
    }

    #[test]
    fn degenerate_cloud_is_handled() {
        let d = SymbolDensity::fit(vec![ComplexSample::new(0.5, 0.5); 1000]).unwrap();
        assert!(d.log_density(ComplexSample::new(0.5, 0.5)).is_finite());
    }

    #[test]
    fn oracle_needs_enough_samples() {
        let c = Constellation::with_power(vec![ComplexSample::new(1.0, 0.0), ComplexSample::new(-1.0, 0.0)], 1e-3)
            .unwrap();
        assert!(LikelihoodOracle::build(&c, &ChannelParams::default(), 999, 0).is_err());
    }

    #[test]
    fn ml_ties_go_to_lowest_index() {
        let c = Constellation::new(vec![ComplexSample::new(0.03, 0.0), ComplexSample::new(0.03, 0.0)]).unwrap();
        let params = ChannelParams { noise_power_w: watts_from_dbm(-30.0), ..ChannelParams::default() }.linear();
        let oracle = LikelihoodOracle::build(&c, &params, 2000, 0).unwrap();
        let d = oracle.densities()[0].clone();
        let twin = LikelihoodOracle::from_densities(vec![d.clone(), d], params).unwrap();
        assert_eq!(twin.ml_detect(ComplexSample::new(0.0, 0.0)), 0);
        assert_eq!(twin.ml_detect(ComplexSample::new(0.03, 0.0)), 0);
    }

    #[test]
    fn info_sum_statistics() {
        let mut acc = InfoSum::default();
        for v in [1.0, 2.0, 3.0, 4.0] {
            acc.push(v);
        }
        assert_eq!(acc.mean(), 2.5);
        assert!((acc.std_error() - (5.0f64 / 3.0 / 4.0).sqrt()).abs() < 1e-12);
        assert_eq!(chunk_count(0), 0);
        assert_eq!(chunk_count(CHUNK + 1), 2);
        assert_eq!(chunk_len(CHUNK + 1, 1), 1);
    }
}
