//! Experiment runner over `hankel-core`: configuration files, parameter
//! sweeps on a rayon pool, and CSV/JSON/gnuplot reports.

pub mod config;
pub mod experiments;
pub mod record;
pub mod report;

pub use config::{ConfigError, ExperimentConfig};
pub use experiments::{find, run_experiment, EXPERIMENTS};
pub use record::ExperimentRecord;
pub use report::{emit_report, Format};

/// Environment variable naming the default output directory.
pub const OUT_ENV: &str = "HANKEL_LAB_OUT";
