//! Parameter sweeps on a worker pool. Rows come back in grid order whatever
//! the number of threads.

use rayon::prelude::*;

use crate::config::{Config, Scenario};
use crate::error::{CliError, Result};
use crate::scenario::{evaluate, Row};

pub(crate) fn with_pool<T: Send>(threads: Option<usize>, job: impl FnOnce() -> T + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads.unwrap_or(0))
        .build()
        .map_err(|e| CliError::Config(format!("thread pool: {e}")))?;
    Ok(pool.install(job))
}

pub fn run_sweep(cfg: &Config, threads: Option<usize>) -> Result<Vec<Row>> {
    if cfg.scenario == Scenario::Closed {
        return Err(CliError::Config(
            "the closed scenario is a time trace, not a sweep".into(),
        ));
    }
    let grid = cfg.grid()?;
    with_pool(threads, || grid.par_iter().map(|p| evaluate(cfg, p)).collect())?
}
