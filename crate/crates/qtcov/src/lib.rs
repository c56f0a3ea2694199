//! File formats, experiment harness and plotting on top of `qtcov-core`.

pub mod batch_io;
pub mod config;
pub mod error;
pub mod pipeline;
pub mod plot;
pub mod rulers;
pub mod runner;
pub mod table;

pub use config::{ConfigFile, ExperimentConfig, ExperimentId, Profile};
pub use error::{Error, Result};
pub use plot::{emit_plot, PlotKind};
pub use runner::run_experiment;
pub use table::{ResultTable, Row, Stat};

/// Environment variable that overrides the output directory.
pub const OUT_DIR_ENV: &str = "QTCOV_OUT_DIR";
