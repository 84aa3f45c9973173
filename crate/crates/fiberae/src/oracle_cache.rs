//! Binary cache of the simulated per-symbol output clouds behind a
//! [`LikelihoodOracle`]. Refitting the densities from cached clouds is far
//! cheaper than propagating them again.
//!
//! Layout, all little-endian:
//!
//! | field | type |
//! |---|---|
//! | magic `FAEORC\0\0` | 8 bytes |
//! | version | u32 |
//! | m, samples per symbol | u64, u64 |
//! | seed | u64 |
//! | link_length_km, gamma, noise_power_w | f64 x3 |
//! | segments | u64 |
//! | channel seed | u64 |
//! | constellation | m x (f64, f64) |
//! | clouds | m x samples x (f64, f64) |

use std::path::Path;

use fiberae_core::channel::{ChannelParams, ComplexSample};
use fiberae_core::oracle::{symbol_cloud, Constellation, LikelihoodOracle, SymbolDensity};

use crate::{Error, Result};

const MAGIC: &[u8; 8] = b"FAEORC\0\0";
pub const VERSION: u32 = 1;

/// Everything needed to rebuild an oracle without re-simulating.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleCache {
    pub constellation: Constellation,
    pub params: ChannelParams,
    pub seed: u64,
    pub clouds: Vec<Vec<ComplexSample>>,
}

impl OracleCache {
    /// Simulate the clouds, one symbol at a time.
    pub fn simulate(constellation: &Constellation, params: &ChannelParams, samples: usize, seed: u64) -> Self {
        let clouds = constellation
            .points()
            .iter()
            .enumerate()
            .map(|(s, &p)| symbol_cloud(p, params, samples, seed, s))
            .collect();
        OracleCache { constellation: constellation.clone(), params: *params, seed, clouds }
    }

    pub fn samples(&self) -> usize {
        self.clouds.first().map_or(0, Vec::len)
    }

    /// True when this cache was simulated for exactly these inputs.
    pub fn matches(&self, constellation: &Constellation, params: &ChannelParams, samples: usize, seed: u64) -> bool {
        self.constellation == *constellation && self.params == *params && self.samples() == samples && self.seed == seed
    }

    pub fn oracle(&self) -> Result<LikelihoodOracle> {
        let densities = self
            .clouds
            .iter()
            .map(|c| SymbolDensity::fit(c.clone()))
            .collect::<fiberae_core::Result<Vec<_>>>()?;
        Ok(LikelihoodOracle::from_densities(densities, self.params)?)
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let m = self.constellation.m();
        let n = self.samples();
        let mut out = Vec::with_capacity(96 + 16 * m * (n + 1));
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&VERSION.to_le_bytes());
        for v in [m as u64, n as u64, self.seed] {
            out.extend_from_slice(&v.to_le_bytes());
        }
        for v in [self.params.link_length_km, self.params.gamma, self.params.noise_power_w] {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out.extend_from_slice(&(self.params.segments as u64).to_le_bytes());
        out.extend_from_slice(&self.params.seed.to_le_bytes());
        for p in self.constellation.points().iter().chain(self.clouds.iter().flatten()) {
            out.extend_from_slice(&p.re.to_le_bytes());
            out.extend_from_slice(&p.im.to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader { bytes, pos: 0 };
        if r.take(8)? != MAGIC {
            return Err(r.error("bad magic"));
        }
        let version = u32::from_le_bytes(r.take(4)?.try_into().unwrap());
        if version != VERSION {
            return Err(Error::Version { what: "oracle cache", found: version, expected: VERSION });
        }
        let m = r.u64()? as usize;
        let n = r.u64()? as usize;
        let seed = r.u64()?;
        let params = ChannelParams {
            link_length_km: r.f64()?,
            gamma: r.f64()?,
            noise_power_w: r.f64()?,
            segments: r.u64()? as usize,
            seed: r.u64()?,
        };
        let expected = n.checked_add(1).and_then(|k| k.checked_mul(m)).and_then(|k| k.checked_mul(16));
        if expected.map_or(true, |e| r.remaining() < e) {
            return Err(r.error("truncated"));
        }
        let points = (0..m).map(|_| r.complex()).collect::<Result<Vec<_>>>()?;
        let clouds = (0..m)
            .map(|_| (0..n).map(|_| r.complex()).collect::<Result<Vec<_>>>())
            .collect::<Result<Vec<_>>>()?;
        if r.remaining() != 0 {
            return Err(r.error("trailing bytes"));
        }
        Ok(OracleCache { constellation: Constellation::new(points)?, params, seed, clouds })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        }
        std::fs::write(path, self.to_bytes()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::from_bytes(&bytes)
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl Reader<'_> {
    fn error(&self, message: &str) -> Error {
        Error::Format { what: "oracle cache", message: format!("{message} at byte {}", self.pos) }
    }

    fn remaining(&self) -> usize {
        self.bytes.len() - self.pos
    }

    fn take(&mut self, n: usize) -> Result<&[u8]> {
        if self.remaining() < n {
            return Err(self.error("truncated"));
        }
        let s = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn complex(&mut self) -> Result<ComplexSample> {
        Ok(ComplexSample::new(self.f64()?, self.f64()?))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use fiberae_core::channel::watts_from_dbm;
    use fiberae_core::eval::qam;

    fn cache() -> OracleCache {
        let params = ChannelParams { segments: 5, ..ChannelParams::default() };
        OracleCache::simulate(&qam(4, watts_from_dbm(0.0)).unwrap(), &params, 1000, 9)
    }

    #[test]
    fn round_trip_and_oracle_identity() {
        let c = cache();
        let back = OracleCache::from_bytes(&c.to_bytes()).unwrap();
        assert_eq!(back, c);
        let built = LikelihoodOracle::build(&c.constellation, &c.params, 1000, 9).unwrap();
        assert_eq!(back.oracle().unwrap(), built);
        assert!(back.matches(&c.constellation, &c.params, 1000, 9));
        assert!(!back.matches(&c.constellation, &c.params, 1000, 10));
    }

    #[test]
    fn damaged_files_are_rejected() {
        let bytes = cache().to_bytes();
        assert!(matches!(OracleCache::from_bytes(&bytes[..bytes.len() - 3]), Err(Error::Format { .. })));
        assert!(matches!(OracleCache::from_bytes(&bytes[..20]), Err(Error::Format { .. })));
        let mut bad = bytes.clone();
        bad[8] = 7;
        assert!(matches!(OracleCache::from_bytes(&bad), Err(Error::Version { found: 7, .. })));
        let mut extra = bytes;
        extra.push(0);
        assert!(matches!(OracleCache::from_bytes(&extra), Err(Error::Format { .. })));
    }
}
