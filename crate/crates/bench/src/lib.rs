//! Monte-Carlo experiments, result tables and the `wgs` command line.

pub mod cli;
pub mod config;
pub mod error;
pub mod experiment;
pub mod metrics;
pub mod report;
pub mod scene;

pub use config::{ExperimentConfig, Method, Scenario};
pub use error::{BenchError, Result};
pub use report::{ResultRow, ResultTable};
