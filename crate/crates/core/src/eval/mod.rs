//! Error metrics and the multi-method comparison harness.
//!
//! Percentages are relative to the per-axis full-scale range in
//! [`AxisRanges`]. Standard deviations are population (divide by N).

mod compare;
mod metrics;
mod probes;
mod report;

pub use compare::{compare_methods, ComparisonReport, EvalContext, FittedCalibrator, MethodKind, MethodResult};
pub use metrics::{full_scale_error, nonlinearity, rmse, FseStats};
pub use probes::{crosstalk, nonlinearity_sweep, resolution, CrosstalkOrientation, CrosstalkTable, Resolution};
pub use report::{evaluate, MetricsReport};

use crate::calib::CalibError;
use crate::model::DEFAULT_FULL_SCALE;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EvalError {
    #[error("prediction has {pred} samples but reference has {reference}")]
    LengthMismatch { pred: usize, reference: usize },
    #[error("no samples to evaluate")]
    Empty,
    #[error("nonlinearity sweep needs at least 10 points, got {points}")]
    InsufficientSweep { points: usize },
    #[error("nonlinearity sweep reference is not monotone")]
    NotMonotone,
    #[error("invalid range: {0}")]
    InvalidRange(String),
    #[error("method {method}: {source}")]
    Method { method: String, source: CalibError },
}

/// Full-scale magnitude per axis (N for forces, N*m for moments).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AxisRanges(pub [f64; 6]);

impl Default for AxisRanges {
    fn default() -> Self {
        AxisRanges(DEFAULT_FULL_SCALE)
    }
}

impl AxisRanges {
    pub fn new(values: [f64; 6]) -> Result<AxisRanges, EvalError> {
        for (i, v) in values.iter().enumerate() {
            if !(v.is_finite() && *v > 0.0) {
                return Err(EvalError::InvalidRange(format!(
                    "{} range must be positive, got {v}",
                    crate::AXES[i]
                )));
            }
        }
        Ok(AxisRanges(values))
    }

    pub fn get(&self, axis: crate::Axis) -> f64 {
        self.0[axis.index()]
    }
}
