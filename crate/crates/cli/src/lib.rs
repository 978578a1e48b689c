//! Experiment runner: config files, presets, CSV/SVG artifacts and reports.

pub mod artifacts;
pub mod error;
pub mod plot;
pub mod report;
pub mod run;

pub use error::CliError;
