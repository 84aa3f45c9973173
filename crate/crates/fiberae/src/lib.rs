//! Experiment driver for autoencoder learning over the nonlinear fiber
//! channel: run configuration, checkpoint and oracle-cache files, CSV and
//! raster outputs, thread-parallel Monte-Carlo evaluation, and the
//! `fiberae` command-line tool built on top of them.
//!
//! Parallel evaluation splits every Monte-Carlo run into fixed chunks with one
//! random stream each and merges them in chunk order, so results are the same
//! for any thread count and identical to the sequential functions in
//! [`fiberae_core`].

pub mod checkpoint;
pub mod commands;
pub mod config;
mod error;
pub mod oracle_cache;
pub mod output;
pub mod parallel;

pub use error::{Error, Result};
pub use fiberae_core as core;
