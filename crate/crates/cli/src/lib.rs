//! Simulation driver: configuration, replication engine, experiments and
//! their CSV and manifest output.

pub mod config;
pub mod engine;
pub mod error;
pub mod experiments;
pub mod output;
pub mod plot;

pub use error::{CliError, Result};
