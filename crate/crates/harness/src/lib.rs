//! Experiment driver: JSON configs in, CSV time series and JSON reports out.

pub mod catalog;
pub mod cli;
pub mod config;
pub mod error;
pub mod output;
pub mod pipeline;

pub use config::ExperimentConfig;
pub use error::HarnessError;

/// Process exit codes.
pub mod exit {
    pub const PASS: i32 = 0;
    pub const CHECK_FAILED: i32 = 1;
    pub const SINGULAR: i32 = 2;
    pub const CONFIG: i32 = 3;
}
