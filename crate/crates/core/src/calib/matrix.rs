use nalgebra::{Matrix6, Vector6};

use super::Calibrator;
use crate::model::{Representation, Wrench};
use crate::qp::{AssembledProblem, QpSolution};
use crate::Axis;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LinearMethod {
    PseudoInverse,
    ConstrainedQp,
    GroundTruth,
    /// Loaded from a file or fixture.
    External,
}

impl LinearMethod {
    pub const fn label(self) -> &'static str {
        match self {
            LinearMethod::PseudoInverse => "pinv",
            LinearMethod::ConstrainedQp => "qp",
            LinearMethod::GroundTruth => "truth",
            LinearMethod::External => "external",
        }
    }

    pub fn parse(s: &str) -> Option<LinearMethod> {
        match s.trim() {
            "pinv" => Some(LinearMethod::PseudoInverse),
            "qp" => Some(LinearMethod::ConstrainedQp),
            "truth" => Some(LinearMethod::GroundTruth),
            "external" => Some(LinearMethod::External),
            _ => None,
        }
    }
}

/// Per-axis record of a constrained solve.
#[derive(Debug, Clone, PartialEq)]
pub struct AxisSolve {
    pub axis: Axis,
    pub assembled: AssembledProblem,
    pub solution: QpSolution,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct FitDiagnostics {
    /// Numerical rank of the (centered) regressor matrix.
    pub rank: usize,
    /// The data leave part of coefficient space unconstrained; the returned
    /// matrix is the minimum-norm (pinv) or constraint-selected (qp) solution.
    pub null_space_present: bool,
    pub slack: Option<f64>,
    pub axes: Vec<AxisSolve>,
}

/// Linear calibration `w = C s + offset`.
#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationMatrix {
    /// Rows: axes Fx..Mz. Columns: sensors 1..6.
    pub matrix: Matrix6<f64>,
    pub offset: Vector6<f64>,
    pub representation: Representation,
    pub method: LinearMethod,
    pub diagnostics: FitDiagnostics,
}

impl CalibrationMatrix {
    pub fn new(matrix: Matrix6<f64>, offset: Vector6<f64>, representation: Representation, method: LinearMethod) -> Self {
        CalibrationMatrix { matrix, offset, representation, method, diagnostics: FitDiagnostics::default() }
    }

    /// Matrix with zero offset, e.g. a published matrix.
    pub fn external(matrix: Matrix6<f64>, representation: Representation) -> Self {
        CalibrationMatrix::new(matrix, Vector6::zeros(), representation, LinearMethod::External)
    }

    pub fn from_ground_truth(truth: &crate::model::GroundTruth) -> Self {
        CalibrationMatrix::new(truth.matrix, truth.offset, truth.representation, LinearMethod::GroundTruth)
    }

    pub fn is_finite(&self) -> bool {
        self.matrix.iter().chain(self.offset.iter()).all(|v| v.is_finite())
    }
}

impl Calibrator for CalibrationMatrix {
    fn input_representation(&self) -> Representation {
        self.representation
    }

    fn estimate(&self, values: &[f64; 6]) -> Wrench {
        Wrench::from_vector(&(self.matrix * Vector6::from(*values) + self.offset))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::calib::fixtures::PUBLISHED_CONSTRAINED_MATRIX;
    use crate::model::SensorFrame;

    #[test]
    fn published_matrix_on_sensor_basis_returns_its_columns() {
        let c = CalibrationMatrix::external(Matrix6::from_fn(|r, k| PUBLISHED_CONSTRAINED_MATRIX[r][k]), Representation::Counts);
        for j in 0..6 {
            let mut v = [0.0; 6];
            v[j] = 1.0;
            let w = c.estimate(&v).to_array();
            for r in 0..6 {
                assert_eq!(w[r], PUBLISHED_CONSTRAINED_MATRIX[r][j]);
            }
        }
    }

    #[test]
    fn offset_cancels_at_zero_frame() {
        let offset = Vector6::new(1.0, -2.0, 3.0, 0.1, 0.2, -0.3);
        let c = CalibrationMatrix::new(Matrix6::identity() * 7.0, -offset, Representation::Volts, LinearMethod::External);
        let w = c.estimate(&[0.0; 6]).to_vector() + offset;
        assert_eq!(w, Vector6::zeros());
    }

    #[test]
    fn representation_mismatch_is_rejected() {
        let c = CalibrationMatrix::external(Matrix6::identity(), Representation::Volts);
        let frame = SensorFrame::new(0.0, [1.0; 6], Representation::Counts);
        assert!(matches!(c.apply(&frame), Err(super::super::CalibError::RepresentationMismatch { .. })));
    }
}
