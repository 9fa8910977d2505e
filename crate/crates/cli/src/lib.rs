//! Command-line pipeline around `pareto_trace`: configuration, stage
//! execution, and the CSV/JSON artifacts consumed by plotting scripts.

pub mod artifacts;
pub mod config;
pub mod error;
pub mod pipeline;

pub use config::{ConfigArgs, ObjectiveSet, PipelineConfig, RankChoice};
pub use error::CliError;
pub use pipeline::{run_pipeline, Manifest};
