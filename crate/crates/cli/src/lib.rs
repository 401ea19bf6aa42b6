//! Library side of the `cogradar` executable: configuration, artifacts and
//! the end-to-end pipeline.

pub mod config;
pub mod error;
pub mod io;
pub mod pipeline;
pub mod setup;

pub use config::PipelineConfig;
pub use error::{CliError, CliResult};
pub use pipeline::{run_pipeline, Report};

/// Environment variable capping the worker thread count.
pub const THREADS_ENV: &str = "COGRADAR_THREADS";
