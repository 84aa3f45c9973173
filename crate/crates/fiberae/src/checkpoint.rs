//! Versioned TOML checkpoints of a trained autoencoder.
//!
//! ```toml
//! format = "fiberae-checkpoint"
//! version = 1
//! m = 16
//! input_power_w = 0.001
//! norm_scale = 0.0123
//!
//! [channel]            # link_length_km, gamma, noise_power_w, segments, seed
//! [train]              # optional: batch_size, batches, learning_rate, seed, power_dbm
//! [[tx]]               # one table per layer, input to output
//! inputs = 16
//! outputs = 16
//! activation = "tanh"  # tanh | sigmoid | linear
//! weights = [...]      # row-major outputs x inputs
//! biases = [...]
//! [[rx]]
//! ```
//!
//! All reals are written in shortest round-trip decimal form, so loading a
//! checkpoint restores every parameter bit for bit.

use std::path::Path;

use fiberae_core::autoencoder::{AutoencoderModel, TrainConfig};
use fiberae_core::channel::ChannelParams;
use fiberae_core::nn::{Activation, DenseLayer, DenseNetwork};
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub const FORMAT: &str = "fiberae-checkpoint";
pub const VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub(crate) struct ChannelRecord {
    pub link_length_km: f64,
    pub gamma: f64,
    pub noise_power_w: f64,
    pub segments: usize,
    pub seed: u64,
}

impl From<&ChannelParams> for ChannelRecord {
    fn from(p: &ChannelParams) -> Self {
        ChannelRecord {
            link_length_km: p.link_length_km,
            gamma: p.gamma,
            noise_power_w: p.noise_power_w,
            segments: p.segments,
            seed: p.seed,
        }
    }
}

impl From<&ChannelRecord> for ChannelParams {
    fn from(r: &ChannelRecord) -> Self {
        ChannelParams {
            link_length_km: r.link_length_km,
            gamma: r.gamma,
            noise_power_w: r.noise_power_w,
            segments: r.segments,
            seed: r.seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TrainRecord {
    batch_size: usize,
    batches: usize,
    learning_rate: f64,
    seed: u64,
    power_dbm: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct LayerRecord {
    inputs: usize,
    outputs: usize,
    activation: String,
    weights: Vec<f64>,
    biases: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CheckpointFile {
    format: String,
    version: u32,
    m: usize,
    input_power_w: f64,
    norm_scale: f64,
    channel: ChannelRecord,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    train: Option<TrainRecord>,
    tx: Vec<LayerRecord>,
    rx: Vec<LayerRecord>,
}

/// A model plus the training configuration that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub model: AutoencoderModel,
    pub train: Option<TrainConfig>,
}

fn layer_records(net: &DenseNetwork) -> Vec<LayerRecord> {
    net.layers()
        .iter()
        .map(|l| LayerRecord {
            inputs: l.inputs(),
            outputs: l.outputs(),
            activation: l.activation().name().to_string(),
            weights: l.weights().to_vec(),
            biases: l.biases().to_vec(),
        })
        .collect()
}

fn network(records: Vec<LayerRecord>) -> Result<DenseNetwork> {
    let layers = records
        .into_iter()
        .map(|r| {
            let activation = Activation::from_name(&r.activation).ok_or_else(|| Error::Format {
                what: "checkpoint",
                message: format!("unknown activation {:?}", r.activation),
            })?;
            Ok(DenseLayer::from_parts(r.inputs, r.outputs, r.weights, r.biases, activation)?)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(DenseNetwork::new(layers)?)
}

impl Checkpoint {
    pub fn new(model: AutoencoderModel, train: Option<TrainConfig>) -> Self {
        Checkpoint { model, train }
    }

    pub fn to_toml(&self) -> String {
        let model = &self.model;
        let file = CheckpointFile {
            format: FORMAT.to_string(),
            version: VERSION,
            m: model.m(),
            input_power_w: model.input_power_w(),
            norm_scale: model.norm_scale(),
            channel: model.channel().into(),
            train: self.train.as_ref().map(|t| TrainRecord {
                batch_size: t.batch_size,
                batches: t.batches,
                learning_rate: t.learning_rate,
                seed: t.seed,
                power_dbm: t.power_dbm,
            }),
            tx: layer_records(model.tx()),
            rx: layer_records(model.rx()),
        };
        toml::to_string(&file).expect("checkpoint always serializes")
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let header: toml::Table = text
            .parse()
            .map_err(|e: toml::de::Error| Error::Format { what: "checkpoint", message: e.to_string() })?;
        if header.get("format").and_then(|v| v.as_str()) != Some(FORMAT) {
            return Err(Error::Format { what: "checkpoint", message: format!("missing format = {FORMAT:?}") });
        }
        let version = header.get("version").and_then(|v| v.as_integer()).unwrap_or(-1);
        if version != VERSION as i64 {
            return Err(Error::Version { what: "checkpoint", found: version.max(0) as u32, expected: VERSION });
        }
        let file: CheckpointFile = header
            .try_into()
            .map_err(|e: toml::de::Error| Error::Format { what: "checkpoint", message: e.to_string() })?;
        let model = AutoencoderModel::from_parts(
            file.m,
            network(file.tx)?,
            network(file.rx)?,
            file.norm_scale,
            (&file.channel).into(),
            file.input_power_w,
        )?;
        let train = file.train.map(|t| TrainConfig {
            batch_size: t.batch_size,
            batches: t.batches,
            learning_rate: t.learning_rate,
            seed: t.seed,
            power_dbm: t.power_dbm,
        });
        Ok(Checkpoint { model, train })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        }
        std::fs::write(path, self.to_toml()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text)
    }
}
