//! File formats, configuration, parallel experiment runs and plot output
//! for `probelab-core`, plus the `probelab` command-line tool.

pub mod config;
pub mod io;
pub mod output;
pub mod runner;

pub use io::{load_dataset, save_dataset, DatasetError, Manifest};
pub use runner::{resolve_data, run_parallel, worker_count};
