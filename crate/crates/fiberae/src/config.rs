//! Run configuration, read from a TOML document with one table per block.
//!
//! Every key is optional; missing keys take the reference operating point
//! (5000 km, gamma 1.27, -21.3 dBm noise, 50 segments, m = 16). Unknown keys
//! are rejected.

use std::path::{Path, PathBuf};

use fiberae_core::autoencoder::{Architecture, TrainConfig};
use fiberae_core::channel::{watts_from_dbm, ChannelParams};
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChannelBlock {
    pub link_length_km: f64,
    pub gamma: f64,
    pub noise_power_dbm: f64,
    pub segments: usize,
    /// Master seed; every random stream of a run derives from it.
    pub seed: u64,
}

impl Default for ChannelBlock {
    fn default() -> Self {
        ChannelBlock { link_length_km: 5000.0, gamma: 1.27, noise_power_dbm: -21.3, segments: 50, seed: 0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelBlock {
    pub m: usize,
    /// Hidden transmitter widths; defaults to five layers of `m`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tx_hidden: Option<Vec<usize>>,
    /// Hidden receiver widths; defaults to six layers of `m`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rx_hidden: Option<Vec<usize>>,
}

impl Default for ModelBlock {
    fn default() -> Self {
        ModelBlock { m: 16, tx_hidden: None, rx_hidden: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainBlock {
    pub learning_rate: f64,
    /// Defaults to `64 m`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub batch_size: Option<usize>,
    pub batches: usize,
    /// Start each power point from the previous point's trained model.
    pub warm_start: bool,
}

impl Default for TrainBlock {
    fn default() -> Self {
        TrainBlock { learning_rate: 1e-3, batch_size: None, batches: 10_000, warm_start: false }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalBlock {
    pub n_samples: usize,
    /// Channel samples per symbol for the likelihood oracle.
    pub oracle_samples: usize,
    pub raster_resolution: usize,
    /// Raster half-width in units of `sqrt(P_in)`.
    pub raster_half_width: f64,
}

impl Default for EvalBlock {
    fn default() -> Self {
        EvalBlock { n_samples: 100_000, oracle_samples: 100_000, raster_resolution: 256, raster_half_width: 3.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PathsBlock {
    /// Checkpoint directory; relative paths resolve against `outputs`.
    pub checkpoints: PathBuf,
    pub outputs: PathBuf,
}

impl Default for PathsBlock {
    fn default() -> Self {
        PathsBlock { checkpoints: PathBuf::from("checkpoints"), outputs: PathBuf::from("out") }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub channel: ChannelBlock,
    pub model: ModelBlock,
    pub train: TrainBlock,
    pub eval: EvalBlock,
    pub paths: PathsBlock,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let config: RunConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text)
    }

    /// The resolved configuration as TOML.
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration always serializes")
    }

    pub fn validate(&self) -> Result<()> {
        self.channel_params().validate()?;
        if self.channel.seed > i64::MAX as u64 {
            return Err(Error::Config("channel.seed must fit in a signed 64-bit integer".into()));
        }
        let m = self.model.m;
        if m < 2 {
            return Err(Error::Config("model.m must be at least 2".into()));
        }
        for widths in [&self.model.tx_hidden, &self.model.rx_hidden].into_iter().flatten() {
            if widths.iter().any(|&w| w == 0) {
                return Err(Error::Config("hidden widths must be positive".into()));
            }
        }
        self.train_config(0.0).validate(m)?;
        if self.eval.n_samples == 0 {
            return Err(Error::Config("eval.n_samples must be positive".into()));
        }
        if self.eval.oracle_samples < fiberae_core::oracle::MIN_SAMPLES {
            return Err(Error::Config("eval.oracle_samples must be at least 1000".into()));
        }
        if self.eval.raster_resolution < 16 {
            return Err(Error::Config("eval.raster_resolution must be at least 16".into()));
        }
        if !(self.eval.raster_half_width > 0.0) {
            return Err(Error::Config("eval.raster_half_width must be positive".into()));
        }
        Ok(())
    }

    pub fn channel_params(&self) -> ChannelParams {
        ChannelParams {
            link_length_km: self.channel.link_length_km,
            gamma: self.channel.gamma,
            noise_power_w: watts_from_dbm(self.channel.noise_power_dbm),
            segments: self.channel.segments,
            seed: self.channel.seed,
        }
    }

    pub fn architecture(&self) -> Architecture {
        let m = self.model.m;
        let standard = Architecture::standard(m);
        Architecture {
            tx_hidden: self.model.tx_hidden.clone().unwrap_or(standard.tx_hidden),
            rx_hidden: self.model.rx_hidden.clone().unwrap_or(standard.rx_hidden),
        }
    }

    pub fn train_config(&self, power_dbm: f64) -> TrainConfig {
        TrainConfig {
            batch_size: self.train.batch_size.unwrap_or(64 * self.model.m),
            batches: self.train.batches,
            learning_rate: self.train.learning_rate,
            seed: self.channel.seed,
            power_dbm,
        }
    }

    pub fn checkpoint_dir(&self) -> PathBuf {
        if self.paths.checkpoints.is_absolute() {
            self.paths.checkpoints.clone()
        } else {
            self.paths.outputs.join(&self.paths.checkpoints)
        }
    }

    /// Checkpoint file of the model trained at `power_dbm`.
    pub fn checkpoint_path(&self, power_dbm: f64) -> PathBuf {
        self.checkpoint_dir().join(checkpoint_file_name(self.model.m, power_dbm))
    }
}

pub fn checkpoint_file_name(m: usize, power_dbm: f64) -> String {
    format!("ae_m{m}_{power_dbm:+.2}dBm.toml")
}
