//! Experiment configuration, staged pipeline with persisted artifacts, and
//! report assembly.

pub mod config;
pub mod evaluate;
pub mod featurize;
pub mod pipeline;
pub mod report;
pub mod svg;

pub use config::{ExperimentConfig, CONFIG_SCHEMA, ENV_PREFIX};
pub use pipeline::{run_pipeline, run_stage, run_synth, run_synth_sweep, RunContext, STAGES};
pub use report::{emit_report, parse_formats, render_markdown, ExperimentReport, ReportFormat};
