//! Experiment harness for the `streamflow` simulator: config loading,
//! sweeps, calibration and CSV/JSON output.

pub mod calibrate;
pub mod commands;
pub mod error;
pub mod experiment;
pub mod output;
pub mod presets;
pub mod runner;
pub mod validate;

pub use error::{CliError, Result};

#[cfg(doctest)]
#[doc = include_str!("../../../book/src/harness.md")]
mod book_harness {}
