use nalgebra::{DMatrix, DVector};

use super::{QpError, QpProblem};
use crate::calib::ConstraintSet;
use crate::{Axis, Dataset};

/// A per-axis calibration problem plus a data-quality warning.
#[derive(Debug, Clone, PartialEq)]
pub struct AssembledProblem {
    pub problem: QpProblem,
    /// `h'h` is singular to within `1e-10 * ||h'h||`: the data leave part of
    /// the coefficient space unconstrained. The problem is still solvable
    /// (the solver adds a ridge), so this is not an error.
    pub rank_deficient: bool,
}

/// Least-squares cost of one calibration row: `H = 2 h'h`, `c = -2 h'd` with
/// `h` the raw N x 6 frame matrix and `d` the reference values of `axis`.
pub fn assemble_axis_problem(
    data: &Dataset,
    axis: Axis,
    constraints: &ConstraintSet,
) -> Result<AssembledProblem, QpError> {
    if data.is_empty() {
        return Err(QpError::EmptyDataset);
    }
    let repr = data.representation();
    if data.frames().any(|f| Some(f.representation) != repr) {
        return Err(QpError::MixedRepresentation);
    }
    let h = data.sensor_matrix();
    let d = DVector::from_iterator(data.len(), data.samples().iter().map(|s| s.wrench.get(axis)));
    assemble_from_regressors(&h, &d, constraints)
}

/// Same as [`assemble_axis_problem`] for an arbitrary regressor matrix.
pub fn assemble_from_regressors(
    h: &DMatrix<f64>,
    d: &DVector<f64>,
    constraints: &ConstraintSet,
) -> Result<AssembledProblem, QpError> {
    if h.nrows() == 0 {
        return Err(QpError::EmptyDataset);
    }
    if h.nrows() != d.len() {
        return Err(QpError::DimensionMismatch(format!(
            "{} regressor rows but {} targets",
            h.nrows(),
            d.len()
        )));
    }
    let gram = h.transpose() * h;
    let eig = gram.clone().symmetric_eigenvalues();
    let top = eig.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let bottom = eig.iter().fold(f64::INFINITY, |a, v| a.min(*v));
    let rank_deficient = top == 0.0 || bottom <= 1e-10 * top;
    let hess = gram * 2.0;
    let hess = (&hess + hess.transpose()) * 0.5;
    let c = -(h.transpose() * d) * 2.0;
    let problem = QpProblem::new(hess, c, constraints.a.clone(), constraints.b.clone())?;
    Ok(AssembledProblem { problem, rank_deficient })
}
