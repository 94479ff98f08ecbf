//! Experiment configuration, presets, runs and reproduction of published
//! results.

pub mod config;
pub mod presets;
pub mod published;
pub mod reproduce;
pub mod run;

pub use config::{ConfigError, ExperimentConfig};
pub use presets::{preset, PRESET_NAMES};
pub use reproduce::{reproduce, Target};
pub use run::{run, Overrides, RunError, RunOutcome};
