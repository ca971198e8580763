//! Experiment runner for random-time stable fields: TOML configurations,
//! seeded runs with hashed artifacts, kernel documentation and the
//! acceptance suite.

pub mod acceptance;
pub mod config;
pub mod describe;
pub mod manifest;
pub mod run;

pub use config::{ConfigError, ExperimentConfig, ExperimentKind};
pub use run::{run, RunOptions, RunOutcome, RunReport};
