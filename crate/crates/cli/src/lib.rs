//! Experiment harness: simulation, reconstruction, dictionary building,
//! identification and operator spectra driven by one JSON config.

pub mod commands;
pub mod config;
pub mod output;

pub use config::ExperimentConfig;
