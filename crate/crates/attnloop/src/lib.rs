//! File formats, multi-threaded runs and the command line for
//! [`attnloop_core`].

pub mod analysis;
pub mod cli;
pub mod config;
pub mod formats;
pub mod manifest;
pub mod parallel;
pub mod report;

pub use analysis::{run_analysis, run_fit, Analysis, AnalysisOptions, FitModel};
pub use config::{parse_config, to_config_string};
pub use formats::{parse_event_log, write_event_log, LogFormat, ParsedLog};
pub use manifest::RunManifest;
pub use parallel::{lifetime_histogram, simulate_population_parallel, worker_count};
