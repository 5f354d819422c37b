//! Experiment configuration, the end-to-end pipeline, controller comparison,
//! CSV logs and plots.

pub mod config;
pub mod controllers;
pub mod log;
pub mod pipeline;
pub mod plot;

pub use config::{ExperimentConfig, PushDirection, S0Choice};
pub use log::{emit_csv, EpisodeLog, StepLog};
pub use pipeline::{compare_controllers, run_pipeline, ControllerKind, Design, PipelineOutput};
pub use plot::{emit_plot, PlotKind};
