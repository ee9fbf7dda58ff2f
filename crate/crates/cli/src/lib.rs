//! Configuration, orchestration and export for the pair-generation
//! simulator. The `sfpg` binary is a thin wrapper around [`run_pipeline`].

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod error;
pub mod manifest;
pub mod pipeline;
pub mod quantity;

pub use config::{CachePolicy, ConfigError, RunConfig};
pub use error::{CliError, NumericalError};
pub use manifest::Manifest;
pub use pipeline::{expand, run_pipeline, RunOptions, Stage};
