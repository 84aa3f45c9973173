//! Seeded random streams and Gaussian sampling.
//!
//! Every random quantity in the crate is drawn from a ChaCha8 stream selected
//! by `(seed, domain, index)`. Work that is split into chunks uses the chunk
//! number as `index`, so results do not depend on how chunks are scheduled.
//! Gaussian variates come from the Box–Muller transform, one pair per call.

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

use crate::math;

pub use rand_chacha::ChaCha8Rng as Stream;

/// Number of samples covered by one random stream in chunked Monte-Carlo loops.
pub const CHUNK: usize = 4096;

/// Independent purposes that consume randomness.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Domain {
    Channel = 0x6368_616e,
    Init = 0x696e_6974,
    Training = 0x7472_6169,
    OracleBuild = 0x6f72_636c,
    MutualInformation = 0x6d75_7469,
    SymbolErrors = 0x7365_7272,
    InformationRate = 0x6169_7272,
    Sweep = 0x7377_6570,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derive a child seed, used for per-power-point seeds in sweeps.
pub fn derive_seed(seed: u64, domain: Domain, index: u64) -> u64 {
    splitmix64(splitmix64(seed ^ domain as u64).wrapping_add(index))
}

/// The random stream for `(seed, domain, index)`.
pub fn stream(seed: u64, domain: Domain, index: u64) -> Stream {
    let mut rng = ChaCha8Rng::seed_from_u64(splitmix64(seed ^ domain as u64));
    rng.set_stream(index);
    rng
}

/// Uniform variate in `(0, 1]` with 53 random bits.
#[inline]
pub fn uniform_open<R: RngCore + ?Sized>(rng: &mut R) -> f64 {
    ((rng.next_u64() >> 11) + 1) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Uniform variate in `[lo, hi)`.
#[inline]
pub fn uniform_range<R: RngCore + ?Sized>(rng: &mut R, lo: f64, hi: f64) -> f64 {
    let u = (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64);
    lo + (hi - lo) * u
}

/// A pair of independent standard normal variates (Box–Muller).
#[inline]
pub fn standard_normal_pair<R: RngCore + ?Sized>(rng: &mut R) -> (f64, f64) {
    let u1 = uniform_open(rng);
    let u2 = uniform_open(rng);
    let r = math::sqrt(-2.0 * math::ln(u1));
    let (s, c) = math::sin_cos(core::f64::consts::TAU * u2);
    (r * c, r * s)
}
