//! Configuration-driven runner for the perforated-domain experiments.
//!
//! A run reads a `key = value` config (see [`config`]), executes every sweep
//! point on a bounded pool and writes a CSV table, a fits table, SVG plots
//! and a manifest into the output directory.

pub mod config;
pub mod error;
pub mod plot;
pub mod run;

pub use config::{ExperimentConfig, Kind};
pub use error::{HarnessError, Result};
pub use plot::emit_plot;
pub use run::{run_experiment, Report, RunOptions};
