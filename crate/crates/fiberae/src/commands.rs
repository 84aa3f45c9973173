//! One function per experiment stage. Commands share no state except the
//! checkpoint files written by [`cmd_train`], and write every result under the
//! output directory together with `resolved_config.toml`.

use std::path::{Path, PathBuf};

use fiberae_core::autoencoder::AutoencoderModel;
use fiberae_core::channel::{watts_from_dbm, ChannelParams};
use fiberae_core::eval::{qam, sweep_seed, MinDistance, Metric, RasterSpec, SweepResult};
use fiberae_core::gradcheck::{gradient_suite, GradientCheck, TOLERANCE};
use fiberae_core::oracle::{Constellation, LikelihoodOracle};
use rayon::prelude::*;

use crate::checkpoint::Checkpoint;
use crate::config::RunConfig;
use crate::oracle_cache::OracleCache;
use crate::output::{self, Header};
use crate::parallel::{par_air, par_fit, par_mi, par_regions, par_ser, par_simulate, with_threads};
use crate::{Error, Result};

pub const RESOLVED_CONFIG: &str = "resolved_config.toml";

/// Where constellation points come from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Source {
    Qam,
    /// The checkpoint trained at the same power.
    Ae,
}

impl Source {
    pub fn name(self) -> &'static str {
        match self {
            Source::Qam => "qam",
            Source::Ae => "ae",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DetectorKind {
    /// The autoencoder receiver network.
    Ae,
    /// Maximum likelihood under the KDE oracle.
    Ml,
    MinDistance,
}

impl DetectorKind {
    pub fn name(self) -> &'static str {
        match self {
            DetectorKind::Ae => "ae",
            DetectorKind::Ml => "ml",
            DetectorKind::MinDistance => "mindist",
        }
    }
}

/// A validated configuration plus the command-line overrides.
#[derive(Debug, Clone)]
pub struct Context {
    pub config: RunConfig,
    pub threads: Option<usize>,
    /// Directory for reusable oracle sample clouds.
    pub oracle_cache: Option<PathBuf>,
    config_text: String,
}

impl Context {
    pub fn new(mut config: RunConfig, seed: Option<u64>, out: Option<PathBuf>, threads: Option<usize>) -> Result<Self> {
        if let Some(seed) = seed {
            config.channel.seed = seed;
        }
        if let Some(out) = out {
            config.paths.outputs = out;
        }
        if threads == Some(0) {
            return Err(Error::Usage("--threads must be positive".into()));
        }
        config.validate()?;
        let config_text = config.to_toml();
        Ok(Context { config, threads, oracle_cache: None, config_text })
    }

    pub fn out_dir(&self) -> &Path {
        &self.config.paths.outputs
    }

    pub fn header(&self) -> Header {
        Header::new(&self.config_text, self.config.channel.seed)
    }

    pub fn params(&self) -> ChannelParams {
        self.config.channel_params()
    }

    fn prepare(&self) -> Result<()> {
        output::write_file(&self.out_dir().join(RESOLVED_CONFIG), self.config_text.as_bytes())
    }

    fn write(&self, name: &str, contents: &[u8]) -> Result<PathBuf> {
        let path = self.out_dir().join(name);
        output::write_file(&path, contents)?;
        Ok(path)
    }

    fn run<T: Send>(&self, f: impl FnOnce() -> Result<T> + Send) -> Result<T> {
        self.prepare()?;
        with_threads(self.threads, f)?
    }

    pub fn load_model(&self, power_dbm: f64) -> Result<AutoencoderModel> {
        let model = Checkpoint::load(&self.config.checkpoint_path(power_dbm))?.model;
        if model.m() != self.config.model.m {
            return Err(Error::Config(format!("checkpoint has m = {}, config has {}", model.m(), self.config.model.m)));
        }
        Ok(model)
    }

    fn constellation(&self, source: Source, power_dbm: f64) -> Result<Constellation> {
        match source {
            Source::Qam => Ok(qam(self.config.model.m, watts_from_dbm(power_dbm))?),
            Source::Ae => Ok(Constellation::new(self.load_model(power_dbm)?.constellation()?)?),
        }
    }

    /// Oracle for `constellation`, reusing the cache directory when set.
    pub fn oracle(&self, constellation: &Constellation, tag: &str, power_dbm: f64, seed: u64) -> Result<LikelihoodOracle> {
        let params = self.params();
        let samples = self.config.eval.oracle_samples;
        let Some(dir) = &self.oracle_cache else {
            return par_fit(&par_simulate(constellation, &params, samples, seed));
        };
        let path = dir.join(format!("oracle_{tag}_m{}_{power_dbm:+.2}dBm.bin", constellation.m()));
        if path.exists() {
            let cache = OracleCache::load(&path)?;
            if cache.matches(constellation, &params, samples, seed) {
                return par_fit(&cache);
            }
        }
        let cache = par_simulate(constellation, &params, samples, seed);
        cache.save(&path)?;
        par_fit(&cache)
    }

    fn sweep_csv(&self, results: &[SweepResult]) -> String {
        output::sweep_csv(&self.header(), &output::sweep_rows(results))
    }
}

/// Evaluate `measure(power_dbm, seed)` at every power, with the per-point
/// seeds of [`fiberae_core::eval::sweep`].
fn run_sweep<F>(powers: &[f64], metric: Metric, n_samples: usize, seed: u64, mut measure: F) -> Result<Vec<SweepResult>>
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

fn status(message: std::fmt::Arguments<'_>) {
    eprintln!("{message}");
}

/// Train one model per power and write a checkpoint and loss trace for each.
///
/// With `train.warm_start` the powers are trained in order, each starting
/// from the model of the previous one; otherwise they run in parallel from
/// fresh initializations.
pub fn cmd_train(ctx: &Context, powers: &[f64]) -> Result<Vec<PathBuf>> {
    ctx.run(|| {
        let c = &ctx.config;
        let fresh = |p: f64| {
            AutoencoderModel::new(c.model.m, &c.architecture(), ctx.params(), watts_from_dbm(p), c.channel.seed)
        };
        let train_one = |mut model: AutoencoderModel, p: f64| -> Result<(PathBuf, AutoencoderModel)> {
            let config = c.train_config(p);
            status(format_args!("training m={} at {p:+.2} dBm ({} batches)", c.model.m, config.batches));
            let report = model.train(&config)?;
            let path = c.checkpoint_path(p);
            Checkpoint::new(model.clone(), Some(config)).save(&path)?;
            let loss = output::loss_csv(&ctx.header(), p, &report.loss_trace);
            ctx.write(&format!("loss_m{}_{p:+.2}dBm.csv", c.model.m), loss.as_bytes())?;
            Ok((path, model))
        };
        if c.train.warm_start {
            let mut paths = Vec::with_capacity(powers.len());
            let mut previous: Option<AutoencoderModel> = None;
            for &p in powers {
                let start = match previous.take() {
                    Some(mut m) => {
                        m.set_input_power(watts_from_dbm(p))?;
                        m
                    }
                    None => fresh(p)?,
                };
                let (path, model) = train_one(start, p)?;
                paths.push(path);
                previous = Some(model);
            }
            Ok(paths)
        } else {
            powers.par_iter().map(|&p| Ok(train_one(fresh(p)?, p)?.0)).collect()
        }
    })
}

/// Symbol error rate of `source` points under `detector` at every power.
pub fn cmd_ser(ctx: &Context, source: Source, detector: DetectorKind, powers: &[f64]) -> Result<PathBuf> {
    if detector == DetectorKind::Ae && source != Source::Ae {
        return Err(Error::Usage("the ae detector needs --source ae".into()));
    }
    let results = ctx.run(|| {
        let params = ctx.params();
        let n = ctx.config.eval.n_samples;
        run_sweep(powers, Metric::Ser, n, ctx.config.channel.seed, |p, seed| {
            let symbols = ctx.constellation(source, p)?;
            let est = match detector {
                DetectorKind::Ae => {
                    let model = ctx.load_model(p)?;
                    par_ser(&symbols, &model, &params, n, seed)
                }
                DetectorKind::Ml => {
                    let oracle = ctx.oracle(&symbols, source.name(), p, seed)?;
                    par_ser(&symbols, &oracle, &params, n, seed)
                }
                DetectorKind::MinDistance => par_ser(&symbols, &MinDistance(&symbols), &params, n, seed),
            }
            ?;
            status(format_args!("{:+.2} dBm SER {:.6}", p, est.value()));
            Ok(est.value())
        })
    })?;
    let name = format!("ser_{}_{}.csv", source.name(), detector.name());
    ctx.write(&name, ctx.sweep_csv(&results).as_bytes())
}

/// Achievable information rate of the trained models, optionally merged with
/// an external curve file into `air_overlay.csv`.
pub fn cmd_air(ctx: &Context, powers: &[f64], overlay: Option<&Path>) -> Result<Vec<PathBuf>> {
    let overlay_rows = match overlay {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
            let label = path.file_stem().and_then(|s| s.to_str()).unwrap_or("overlay");
            Some(output::parse_sweep_csv(&text, label)?)
        }
        None => None,
    };
    let results = ctx.run(|| {
        let n = ctx.config.eval.n_samples;
        run_sweep(powers, Metric::Air, n, ctx.config.channel.seed, |p, seed| {
            let model = ctx.load_model(p)?;
            let air = par_air(&model, n, seed)?.mean();
            status(format_args!("{p:+.2} dBm AIR {air:.4}"));
            Ok(air)
        })
    })?;
    let mut paths = vec![ctx.write("air.csv", ctx.sweep_csv(&results).as_bytes())?];
    if let Some(extra) = overlay_rows {
        let mut rows = output::sweep_rows(&results);
        rows.extend(extra);
        paths.push(ctx.write("air_overlay.csv", output::sweep_csv(&ctx.header(), &rows).as_bytes())?);
    }
    Ok(paths)
}

/// Oracle mutual information of `source` points at every power.
pub fn cmd_mi(ctx: &Context, source: Source, powers: &[f64]) -> Result<PathBuf> {
    let results = ctx.run(|| {
        let params = ctx.params();
        let n = ctx.config.eval.n_samples;
        run_sweep(powers, Metric::Mi, n, ctx.config.channel.seed, |p, seed| {
            let symbols = ctx.constellation(source, p)?;
            let oracle = ctx.oracle(&symbols, source.name(), p, seed)?;
            let mi = par_mi(&oracle, &symbols, &params, n, seed)?.mean();
            status(format_args!("{p:+.2} dBm MI {mi:.4}"));
            Ok(mi)
        })
    })?;
    ctx.write(&format!("mi_{}.csv", source.name()), ctx.sweep_csv(&results).as_bytes())
}

/// Raster spec from the config at `power_dbm`.
pub fn raster_spec(config: &RunConfig, power_dbm: f64) -> RasterSpec {
    let mut spec = RasterSpec::for_power(watts_from_dbm(power_dbm), config.eval.raster_resolution);
    spec.half_width *= config.eval.raster_half_width / 3.0;
    spec
}

/// Decision regions as a text grid plus a PPM rendering.
pub fn cmd_regions(ctx: &Context, source: Source, detector: DetectorKind, power_dbm: f64) -> Result<Vec<PathBuf>> {
    let spec = raster_spec(&ctx.config, power_dbm);
    let grid = ctx.run(|| {
        let symbols = ctx.constellation(source, power_dbm)?;
        match detector {
            DetectorKind::Ae => {
                if source != Source::Ae {
                    return Err(Error::Usage("the ae detector needs --source ae".into()));
                }
                par_regions(&ctx.load_model(power_dbm)?, &spec)
            }
            DetectorKind::Ml => {
                let seed = sweep_seed(ctx.config.channel.seed, 0);
                par_regions(&ctx.oracle(&symbols, source.name(), power_dbm, seed)?, &spec)
            }
            DetectorKind::MinDistance => par_regions(&MinDistance(&symbols), &spec),
        }
    })?;
    let stem = format!("regions_{}_{}_{power_dbm:+.2}dBm", source.name(), detector.name());
    let text = output::raster_text(&ctx.header(), &spec, &grid);
    Ok(vec![
        ctx.write(&format!("{stem}.txt"), text.as_bytes())?,
        ctx.write(&format!("{stem}.ppm"), &output::raster_ppm(&grid, ctx.config.model.m))?,
    ])
}

pub fn gradcheck_report(checks: &[GradientCheck]) -> String {
    let mut out = String::from("module,case,max_relative_error,status\n");
    for c in checks {
        let verdict = if c.passed() { "pass" } else { "FAIL" };
        out.push_str(&format!("{},\"{}\",{:e},{verdict}\n", c.module, c.case, c.max_relative_error));
    }
    out
}

/// Finite-difference checks of every gradient path. The report is written
/// before a failure is returned.
pub fn cmd_gradcheck(ctx: &Context) -> Result<(PathBuf, Vec<GradientCheck>)> {
    let checks = ctx.run(|| Ok(gradient_suite(&ctx.params(), ctx.config.channel.seed)?))?;
    let mut text = ctx.header().line();
    text.push_str(&format!("# tolerance={TOLERANCE:e}\n"));
    text.push_str(&gradcheck_report(&checks));
    let path = ctx.write("gradcheck.csv", text.as_bytes())?;
    let worst = checks.iter().map(|c| c.max_relative_error).fold(0.0, f64::max);
    if checks.iter().any(|c| !c.passed()) {
        return Err(Error::GradientCheck(worst));
    }
    Ok((path, checks))
}

/// The trained constellation at `power_dbm` as CSV.
pub fn cmd_export_constellation(ctx: &Context, power_dbm: f64) -> Result<PathBuf> {
    let points = ctx.run(|| Ok(ctx.load_model(power_dbm)?.constellation()?))?;
    let name = format!("constellation_m{}_{power_dbm:+.2}dBm.csv", ctx.config.model.m);
    ctx.write(&name, output::constellation_csv(&ctx.header(), &points).as_bytes())
}
