//! Resolves data sources and runs experiment fits on a thread pool.

use std::path::Path;
use std::time::Instant;

use anyhow::{Context, Result};
use probelab_core::eval::{assemble_report, check_data, run_fit, DataSource, ExperimentConfig};
use probelab_core::synth::generate_synthetic;
use probelab_core::{ContrastPairSet, Report};
use rayon::prelude::*;

use crate::io::load_dataset;

/// Environment variable capping the number of worker threads.
pub const THREADS_ENV: &str = "PROBELAB_THREADS";

/// Worker count: `PROBELAB_THREADS` if set to a positive integer, otherwise
/// the available parallelism.
pub fn worker_count() -> usize {
    let available = std::thread::available_parallelism().map_or(1, |n| n.get());
    match std::env::var(THREADS_ENV)
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
    {
        Some(n) if n > 0 => n,
        _ => available,
    }
}

/// Loads or generates the experiment's data. Relative dataset paths are
/// taken relative to `base` (normally the config file's directory).
pub fn resolve_data(cfg: &ExperimentConfig, base: &Path) -> Result<ContrastPairSet> {
    match &cfg.data {
        DataSource::Synthetic(s) => Ok(generate_synthetic(s)?.set),
        DataSource::Dataset { path } => {
            let path = base.join(path);
            load_dataset(&path).with_context(|| format!("loading dataset {}", path.display()))
        }
    }
}

/// Runs all fits on up to `threads` workers. The report does not depend on
/// the thread count. `timing` records the wall-clock time in the report.
pub fn run_parallel(
    cfg: &ExperimentConfig,
    data: &ContrastPairSet,
    threads: usize,
    timing: bool,
) -> Result<Report> {
    check_data(cfg, data)?;
    let start = Instant::now();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads.max(1))
        .build()
        .context("starting worker threads")?;
    let per_fit = pool.install(|| {
        (0..cfg.fits)
            .into_par_iter()
            .map(|f| run_fit(cfg, data, f))
            .collect::<Vec<_>>()
    });
    let mut report = assemble_report(cfg, data, per_fit);
    if timing {
        report.wall_clock_secs = Some(start.elapsed().as_secs_f64());
    }
    Ok(report)
}
