//! Thread-parallel versions of the Monte-Carlo routines in
//! [`fiberae_core`]. Each one computes the same chunks with the same random
//! streams as its sequential counterpart and merges them in chunk order, so
//! the results match bit for bit whatever the thread count.

use fiberae_core::autoencoder::AutoencoderModel;
use fiberae_core::channel::ChannelParams;
use fiberae_core::eval::{air_chunk, region_row, ser_chunk, Detector, LabelGrid, RasterSpec, SerEstimate};
use fiberae_core::oracle::{
    chunk_count, mutual_information_chunk, symbol_cloud, Constellation, InfoSum, LikelihoodOracle, SymbolDensity,
    MIN_SAMPLES,
};
use rayon::prelude::*;

use crate::oracle_cache::OracleCache;
use crate::Result;

/// Run `f` on a pool of `threads` workers, or on the global pool when `None`.
pub fn with_threads<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    match threads {
        None => Ok(f()),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| crate::Error::Usage(format!("cannot start {n} threads: {e}")))?;
            Ok(pool.install(f))
        }
    }
}

/// Simulate oracle clouds, one task per symbol.
pub fn par_simulate(constellation: &Constellation, params: &ChannelParams, samples: usize, seed: u64) -> OracleCache {
    let clouds = constellation
        .points()
        .par_iter()
        .enumerate()
        .map(|(s, &p)| symbol_cloud(p, params, samples, seed, s))
        .collect();
    OracleCache { constellation: constellation.clone(), params: *params, seed, clouds }
}

/// Same result as [`LikelihoodOracle::build`].
pub fn par_build_oracle(
    constellation: &Constellation,
    params: &ChannelParams,
    samples: usize,
    seed: u64,
) -> Result<LikelihoodOracle> {
    params.validate()?;
    if samples < MIN_SAMPLES {
        return Err(fiberae_core::Error::InvalidParameter("oracle needs at least 1000 samples per symbol").into());
    }
    par_fit(&par_simulate(constellation, params, samples, seed))
}

/// Fit every cached cloud in parallel.
pub fn par_fit(cache: &OracleCache) -> Result<LikelihoodOracle> {
    let densities = cache
        .clouds
        .par_iter()
        .map(|c| SymbolDensity::fit(c.clone()))
        .collect::<fiberae_core::Result<Vec<_>>>()?;
    Ok(LikelihoodOracle::from_densities(densities, cache.params)?)
}

/// Same result as [`fiberae_core::eval::ser`].
pub fn par_ser<D: Detector + Sync + ?Sized>(
    symbols: &Constellation,
    detector: &D,
    params: &ChannelParams,
    n_samples: usize,
    seed: u64,
) -> Result<SerEstimate> {
    params.validate()?;
    if detector.m() != symbols.m() {
        return Err(fiberae_core::Error::DimensionMismatch { expected: symbols.m(), found: detector.m() }.into());
    }
    let parts: Vec<SerEstimate> = (0..chunk_count(n_samples))
        .into_par_iter()
        .map(|c| ser_chunk(symbols, detector, params, n_samples, seed, c))
        .collect();
    Ok(parts.into_iter().fold(SerEstimate::default(), SerEstimate::merge))
}

/// Same result as [`fiberae_core::oracle::mutual_information`].
pub fn par_mi(
    oracle: &LikelihoodOracle,
    constellation: &Constellation,
    params: &ChannelParams,
    n_samples: usize,
    seed: u64,
) -> Result<InfoSum> {
    if oracle.m() != constellation.m() {
        return Err(fiberae_core::Error::DimensionMismatch { expected: constellation.m(), found: oracle.m() }.into());
    }
    let parts: Vec<InfoSum> = (0..chunk_count(n_samples))
        .into_par_iter()
        .map(|c| mutual_information_chunk(oracle, constellation, params, n_samples, seed, c))
        .collect();
    Ok(parts.into_iter().fold(InfoSum::default(), InfoSum::merge))
}

/// Same result as [`fiberae_core::eval::air`].
pub fn par_air(model: &AutoencoderModel, n_samples: usize, seed: u64) -> Result<InfoSum> {
    let symbols = Constellation::new(model.constellation()?)?;
    let parts: Vec<InfoSum> = (0..chunk_count(n_samples))
        .into_par_iter()
        .map(|c| air_chunk(model, &symbols, n_samples, seed, c))
        .collect();
    Ok(parts.into_iter().fold(InfoSum::default(), InfoSum::merge))
}

/// Same result as [`fiberae_core::eval::decision_regions`].
pub fn par_regions<D: Detector + Sync + ?Sized>(detector: &D, spec: &RasterSpec) -> Result<LabelGrid> {
    spec.validate()?;
    let rows: Vec<Vec<usize>> = (0..spec.resolution).into_par_iter().map(|r| region_row(detector, spec, r)).collect();
    Ok(LabelGrid { resolution: spec.resolution, labels: rows.concat() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use fiberae_core::autoencoder::Architecture;
    use fiberae_core::channel::watts_from_dbm;
    use fiberae_core::eval::{air, decision_regions, qam, ser};
    use fiberae_core::oracle::mutual_information;

    fn setup() -> (Constellation, ChannelParams) {
        (qam(16, watts_from_dbm(-2.0)).unwrap(), ChannelParams { segments: 10, ..ChannelParams::default() })
    }

    #[test]
    fn parallel_matches_sequential() {
        let (c, p) = setup();
        let seq = LikelihoodOracle::build(&c, &p, 1500, 4).unwrap();
        let par = with_threads(Some(3), || par_build_oracle(&c, &p, 1500, 4)).unwrap().unwrap();
        assert_eq!(seq, par);
        let n = 10_000;
        assert_eq!(ser(&c, &seq, &p, n, 5).unwrap(), par_ser(&c, &par, &p, n, 5).unwrap());
        assert_eq!(mutual_information(&seq, &c, &p, n, 6).unwrap(), par_mi(&par, &c, &p, n, 6).unwrap());
        let spec = RasterSpec::for_power(watts_from_dbm(-2.0), 32);
        assert_eq!(decision_regions(&seq, &spec).unwrap(), par_regions(&par, &spec).unwrap());
    }

    #[test]
    fn air_matches_sequential_for_any_thread_count() {
        let (_, p) = setup();
        let model = AutoencoderModel::new(8, &Architecture::standard(8), p, watts_from_dbm(0.0), 2).unwrap();
        let seq = air(&model, 9000, 1).unwrap();
        for threads in [1, 2, 5] {
            assert_eq!(with_threads(Some(threads), || par_air(&model, 9000, 1)).unwrap().unwrap(), seq);
        }
    }
}
