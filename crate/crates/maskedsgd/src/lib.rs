//! Experiment harness and command-line front end for `maskedsgd-core`.
//!
//! Runs multi-trial convergence experiments in parallel, reads and writes the flat
//! config format, emits CSV tables and SVG plots, and dumps problems and masks.

pub mod cli;
pub mod config;
pub mod dump;
mod error;
pub mod experiment;
pub mod repro;
pub mod svg;
pub mod table;

pub use config::{parse_config, serialize_config};
pub use error::{HarnessError, Result};
pub use experiment::{run_experiment, ExperimentResult, ExperimentSpec};
pub use svg::emit_svg_plot;
pub use table::emit_csv;
