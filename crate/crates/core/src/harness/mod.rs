//! Experiment orchestration: training runs, matrix estimation, analysis and
//! PSRO sweeps. All file output goes through [`io::write_atomic`].

pub mod analyze;
pub mod config;
pub mod files;
pub mod io;
pub mod matches;
pub mod svg;
pub mod sweep;
pub mod train;

pub use analyze::{analyze, AnalysisReport, AnalyzeOptions};
pub use config::ExperimentConfig;
pub use matches::{
    estimate_cross_winrate_matrix, estimate_winrate_matrix, with_threads, Agent, Population,
    SeededMatchRunner,
};
pub use sweep::{psro_sweep, SweepReport, SweepRow};
pub use train::{simulate, train, RunRecord};
