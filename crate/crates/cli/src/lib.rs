//! Experiment harness for the newsvendor pricing library.

pub mod commands;
pub mod config;
pub mod experiment;
pub mod output;

pub use commands::{cmd_compare, cmd_ingest, cmd_simulate, cmd_solve, cmd_sweep};
pub use config::{ExperimentConfig, Overrides, UsageError};
