//! Experiment harness for `tamed-sde`: configuration, execution on a worker
//! pool, CSV and manifest output.

pub mod config;
pub mod run;

pub use config::{Command, ConfigError, ExperimentConfig, Overrides, SchemeChoice, OUTPUT_DIR_ENV};
pub use run::{csv_header, fmt_f64, run, RunOutcome};
