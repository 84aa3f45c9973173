//! End-to-end autoencoder learning over a memoryless nonlinear fiber channel.
//!
//! The crate is `no_std` (with `alloc`) and carries the numerical core:
//!
//! * [`channel`]: the per-sample split-step recursion with nonlinear phase
//!   rotation and distributed noise, plus exact reverse-mode gradients.
//! * [`nn`]: a small dense-network engine (tanh/sigmoid/linear), cross-entropy
//!   and Adam.
//! * [`autoencoder`]: transmitter network, power normalization, channel and
//!   receiver network trained jointly.
//! * [`oracle`]: per-symbol kernel density estimates of the channel law, used
//!   for maximum-likelihood detection and mutual-information estimates.
//! * [`eval`]: QAM reference constellations, symbol error rate, achievable
//!   information rate and decision-region rasters.
//!
//! File formats, configuration, threading and the command-line tool live in
//! the companion `fiberae` crate.

#![cfg_attr(not(any(feature = "std", test)), no_std)]

extern crate alloc;

pub mod autoencoder;
pub mod channel;
mod error;
pub mod eval;
pub mod gradcheck;
mod math;
pub mod nn;
pub mod oracle;
pub mod rng;

pub use autoencoder::{AutoencoderModel, Architecture, Posterior, TrainConfig, TrainReport};
pub use channel::{dbm_from_watts, watts_from_dbm, ChannelParams, ComplexSample, PropagationTape};
pub use error::Error;
pub use eval::{Detector, LabelGrid, Metric, RasterSpec, SweepResult};
pub use nn::{Activation, AdamState, DenseLayer, DenseNetwork};
pub use oracle::{Constellation, LikelihoodOracle};

pub type Result<T, E = Error> = core::result::Result<T, E>;
