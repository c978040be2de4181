//! Experiment orchestration behind the `ftcal` binary: configuration, CSV
//! datasets and matrices, Kalman pre-filtering, run manifests and the
//! command implementations.

mod commands;
mod config;
mod io;
mod kalman;
mod manifest;

pub use commands::{run, Command, RunOptions, RunOutcome};
pub use config::{
    CalibrationSection, ConfigIssue, CurveSection, DemoSection, EvaluationSection, Experiment, ExperimentConfig,
    ModelSection, TrajectorySection,
};
pub use io::{
    load_calibration_matrix, load_dataset, parse_calibration_matrix, parse_dataset, save_calibration_matrix,
    save_dataset, sidecar_path, write_calibration_matrix, write_dataset, DATASET_HEADER,
};
pub use kalman::{kalman_filter, kalman_filter_dataset, KalmanParams};
pub use manifest::{sha256_hex, Manifest, RunStatus};

use crate::calib::CalibError;
use crate::eval::EvalError;
use crate::model::ModelError;

#[derive(Debug, thiserror::Error)]
pub enum PipelineError {
    #[error("{path}: {message}")]
    Io { path: String, message: String },
    #[error("header mismatch: expected `{expected}`, found `{found}`")]
    HeaderMismatch { expected: String, found: String },
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse { line: usize, column: usize, message: String },
    #[error("invalid configuration:\n{}", format_issues(.0))]
    Config(Vec<ConfigIssue>),
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error("validation failed: {0}")]
    Validation(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Calib(#[from] CalibError),
    #[error(transparent)]
    Eval(#[from] EvalError),
}

fn format_issues(issues: &[ConfigIssue]) -> String {
    issues.iter().map(|i| format!("  {i}")).collect::<Vec<_>>().join("\n")
}

impl PipelineError {
    /// 1 for rejected inputs and failed checks, 2 for everything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            PipelineError::HeaderMismatch { .. }
            | PipelineError::Parse { .. }
            | PipelineError::Config(_)
            | PipelineError::Invalid(_)
            | PipelineError::Validation(_) => 1,
            _ => 2,
        }
    }

    pub(crate) fn io(path: &std::path::Path, e: impl std::fmt::Display) -> PipelineError {
        PipelineError::Io { path: path.display().to_string(), message: e.to_string() }
    }
}
