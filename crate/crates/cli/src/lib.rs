//! Experiment driver for the quantized-feedback power allocation study.
//!
//! Each scenario has an in-memory runner in [`scenarios`] and a writer in
//! [`output`] that lays the results out as CSV files, gnuplot scripts and
//! the resolved config in one directory.

pub mod config;
pub mod output;
pub mod plot;
pub mod scenarios;

pub use config::{ExperimentConfig, Scenario};
