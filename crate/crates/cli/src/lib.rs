//! Ingestion, configuration, pipeline orchestration and report emission for
//! the `sarima` command-line tool.

pub mod config;
pub mod error;
pub mod ingest;
pub mod pipeline;
pub mod report;
pub mod svg;
pub mod synthetic;

pub use config::{ConfigArgs, ConstantMode, PipelineConfig};
pub use error::CliError;
pub use ingest::{Category, Dataset, Schema};
pub use pipeline::{run_dataset, run_pipeline, PipelineRun, Stage};
