//! Calibration engines.
//!
//! * [`calibrate_pseudo_inverse`]: ordinary least squares through the
//!   Moore-Penrose pseudo-inverse of the frame matrix.
//! * [`calibrate_qp`]: the same least-squares cost per axis, minimized under
//!   structural inequality constraints ([`default_constraints`]) with the
//!   active-set solver from [`crate::qp`].
//! * [`calibrate_regularized`]: ridge regression on linear or linear plus
//!   squared sensor channels.
//! * [`train_mlp`]: a 6-12-6 tanh network trained by full-batch gradient
//!   descent.
//!
//! Every fitted model implements [`Calibrator`].

mod constrained;
mod constraints;
pub mod fixtures;
mod matrix;
mod mlp;
mod pinv;
mod poly;
mod signs;

pub use constrained::{calibrate_qp, calibrate_qp_with};
pub use constraints::{default_constraints, ConstraintSet, Relation, StructuralConstraints};
pub use matrix::{AxisSolve, CalibrationMatrix, FitDiagnostics, LinearMethod};
pub use mlp::{train_mlp, MlpCalibrator, MlpSettings, Network, TrainingHistory, HIDDEN_UNITS};
pub use pinv::{calibrate_pseudo_inverse, calibrate_pseudo_inverse_with, RANK_TOLERANCE};
pub use poly::{calibrate_regularized, PolyCalibrator};
pub use signs::{check_sign_structure, Sign, SignPattern, SignViolation, ViolationKind, DEFAULT_THETA};

use crate::model::{Representation, SensorFrame, Wrench};
use crate::qp::QpError;
use crate::Axis;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CalibError {
    #[error("need at least {needed} frames, got {got}")]
    InsufficientData { needed: usize, got: usize },
    #[error("dataset frames mix sensor representations")]
    MixedRepresentation,
    #[error("calibrator expects {expected:?} frames, got {got:?}")]
    RepresentationMismatch { expected: Representation, got: Representation },
    #[error("axis {axis}: {source}")]
    Solver { axis: Axis, source: QpError },
    #[error("training diverged at epoch {epoch}")]
    Diverged { epoch: usize },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

/// How the constant operating-point offset of the frames is handled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OffsetMode {
    /// Fit a per-axis offset alongside the matrix (equivalent to appending a
    /// constant regressor column, realized by centering the data).
    #[default]
    Fit,
    /// Pure linear map through the origin.
    Zero,
}

/// A fitted map from sensor frames to wrenches.
pub trait Calibrator {
    fn input_representation(&self) -> Representation;

    /// Wrench estimate for raw channel values, without representation checks.
    fn estimate(&self, values: &[f64; 6]) -> Wrench;

    fn apply(&self, frame: &SensorFrame) -> Result<Wrench, CalibError> {
        let expected = self.input_representation();
        if frame.representation != expected {
            return Err(CalibError::RepresentationMismatch { expected, got: frame.representation });
        }
        Ok(self.estimate(&frame.values))
    }
}

pub(crate) fn check_representation(data: &crate::Dataset) -> Result<Representation, CalibError> {
    let repr = data.representation().ok_or(CalibError::InsufficientData { needed: 1, got: 0 })?;
    if data.frames().any(|f| f.representation != repr) {
        return Err(CalibError::MixedRepresentation);
    }
    Ok(repr)
}

/// Column means of an N x k matrix.
pub(crate) fn column_means(m: &nalgebra::DMatrix<f64>) -> nalgebra::DVector<f64> {
    let n = m.nrows().max(1) as f64;
    nalgebra::DVector::from_fn(m.ncols(), |c, _| m.column(c).sum() / n)
}

pub(crate) fn center(m: &nalgebra::DMatrix<f64>, means: &nalgebra::DVector<f64>) -> nalgebra::DMatrix<f64> {
    let mut out = m.clone();
    for c in 0..m.ncols() {
        out.column_mut(c).add_scalar_mut(-means[c]);
    }
    out
}
