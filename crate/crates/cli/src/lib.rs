//! Command-line orchestration for topiceval: configuration, the pipeline
//! stages behind each subcommand, pre-flight validation and the bundled
//! fixture generator.

pub mod commands;
pub mod config;
pub mod fixture;
pub mod pipeline;
pub mod validate;

pub use config::RunConfig;
pub use pipeline::{run_pipeline, RunOutcome, Stage, StageError};
pub use validate::{validate, Diagnostics};
