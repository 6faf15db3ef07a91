//! File formats, experiment configs and pipelines around `rmdgraph-core`.
//!
//! Every output depends only on the inputs and seeds. Parallel work is
//! collected in a fixed order, so results do not depend on the thread count.

pub mod config;
pub mod error;
pub mod io;
pub mod pipeline;
pub mod sweep;

pub use config::ExperimentConfig;
pub use error::{Error, Result};

/// Environment variable capping the worker thread count.
pub const THREADS_ENV: &str = "RMDGRAPH_THREADS";

/// Sizes the global thread pool from `RMDGRAPH_THREADS`, if set.
pub fn configure_threads() -> Result<()> {
    let Ok(value) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let threads: usize = value
        .trim()
        .parse()
        .ok()
        .filter(|&t| t > 0)
        .ok_or_else(|| Error::Config(format!("{THREADS_ENV} must be a positive integer, got {value:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| Error::Config(e.to_string()))
}
