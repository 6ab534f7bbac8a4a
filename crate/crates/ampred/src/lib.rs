//! Experiment harness around `ampred-core`: configuration, parallel ensembles,
//! and reproducible CSV/JSON output.

pub mod commands;
pub mod config;
pub mod ensemble;
pub mod output;
pub mod quadrature;

pub use commands::Verdict;
pub use config::RunConfig;
