//! Configuration, replicated studies and their on-disk output.

pub mod config;
pub mod output;
pub mod study;

pub use config::{ExperimentConfig, Setting, Study};
pub use output::{aggregate, aggregate_directory, Table};
pub use study::{
    run_convergence_study, run_coverage_study, run_coverage_study_against, run_cs_sweep, run_stepsize_robustness,
    run_study, AggregateReport, TailFit, VariantReport,
};

use crate::error::{Error, Result};

/// Runs `f` on a pool of `threads` workers, or on the global pool.
pub fn with_threads<T, F>(threads: Option<usize>, f: F) -> Result<T>
where
    T: Send,
    F: FnOnce() -> T + Send,
{
    match threads {
        None => Ok(f()),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| Error::InvalidConfig(format!("thread pool: {e}")))?;
            Ok(pool.install(f))
        }
    }
}
