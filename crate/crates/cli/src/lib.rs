//! Pipeline plumbing behind the `eitmono` binary.

pub mod commands;
pub mod config;

pub use commands::{compare, gen_data, reconstruct, render, DataManifest};
pub use config::{DataSource, Overrides, RunConfig};
