//! Command-line front end: configuration, orchestration of the scalar,
//! system and partition pipelines, and report and CSV output.

pub mod config;
pub mod pipeline;
pub mod report;

pub use config::{parse_config, Args, ConfigError, Mode, RunConfig, OUT_ENV};
pub use pipeline::{execute, run, write_outputs, Outputs};
pub use report::{RunReport, SCHEMA_VERSION};
