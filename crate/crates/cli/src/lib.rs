//! Experiment runner for the accsim models: parameter sweeps, figure
//! presets, validation reports and stage timelines, emitted as CSV, JSON or
//! JSON lines for external plotting.

pub mod error;
pub mod presets;
pub mod spec;
pub mod sweep;
pub mod timeline;
pub mod validate;

pub use error::{CliError, CliResult};

/// Environment variable holding the worker-thread count.
pub const WORKERS_ENV: &str = "ACCSIM_WORKERS";
