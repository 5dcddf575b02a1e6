//! Simulation studies and moment-tensor analyses for projected Frobenius medians.
//!
//! Each scenario is described by an [`ExperimentConfig`] and produces an
//! [`ExperimentReport`] of named tables. Replicates run in parallel on
//! per-replicate random streams and are aggregated in replicate order, so a
//! config and seed always give the same bytes.

pub mod bench;
pub mod config;
pub mod error;
pub mod frame;
pub mod quake;
pub mod report;
pub mod shape;
pub mod stats;
pub mod svg;
pub mod tensors;

use std::time::Instant;

pub use config::{ExperimentConfig, OutputFormat, ScenarioKind};
pub use error::{ExperimentError, Result};
pub use frame::run_frame_experiment;
pub use quake::run_earthquake_analysis;
pub use report::{emit_outputs, ExperimentReport, Table};
pub use shape::run_shape_experiment;
pub use tensors::{extract_tbp_frame, ingest_moment_tensors, MomentTensorRecord};

/// Runs the scenario named in `config`.
pub fn run(config: &ExperimentConfig) -> Result<ExperimentReport> {
    config.validate()?;
    let start = Instant::now();
    let mut report = match config.scenario {
        ScenarioKind::ShapeTable => run_shape_experiment(config),
        ScenarioKind::FrameTable => run_frame_experiment(config),
        ScenarioKind::Earthquake => run_earthquake_analysis(config),
        ScenarioKind::Bench => bench::run_bench(config),
    }?;
    report.timing = start.elapsed();
    Ok(report)
}
