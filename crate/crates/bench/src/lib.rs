//! Experiment runner for `rad-core`: TOML experiment configs, trace and
//! summary CSV files, a multi-seed runner, summary comparison and the
//! acceptance suite. The `radbench` binary is a thin CLI over this crate.

pub mod acceptance;
pub mod config;
pub mod error;
pub mod output;
pub mod runner;
pub mod summary;

pub use config::{ExperimentConfig, Kind};
pub use error::BenchError;
pub use summary::{compare, Comparison, Summary};
