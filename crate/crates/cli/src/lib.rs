//! Verification harness: named experiments comparing Monte Carlo estimates
//! from discrete trees with closed-form laws.

pub mod config;
pub mod error;
pub mod experiments;
pub mod report;
pub mod runner;
pub mod stats;

pub use config::{ExperimentConfig, Params};
pub use error::RunError;
pub use experiments::{find, run, ExperimentInfo, CATALOG};
pub use report::{Report, Row};
