use nalgebra::{DVector, Matrix6};

use super::pinv::prepare;
use super::{AxisSolve, CalibError, CalibrationMatrix, ConstraintSet, FitDiagnostics, LinearMethod, OffsetMode};
use crate::qp::{assemble_from_regressors, solve};
use crate::{Dataset, AXES};

/// Constrained least-squares calibration with a fitted offset.
pub fn calibrate_qp(data: &Dataset, constraints: &[ConstraintSet; 6]) -> Result<CalibrationMatrix, CalibError> {
    calibrate_qp_with(data, constraints, OffsetMode::Fit)
}

/// Solves one QP per axis on the (centered) frames: row `a` of the result
/// minimizes `|X x - F_a|^2` subject to `constraints[a]`.
pub fn calibrate_qp_with(
    data: &Dataset,
    constraints: &[ConstraintSet; 6],
    mode: OffsetMode,
) -> Result<CalibrationMatrix, CalibError> {
    let p = prepare(data, mode, 6)?;
    let rank = p.rank();
    let mut c = Matrix6::zeros();
    let mut axes = Vec::with_capacity(6);
    for axis in AXES {
        let a = axis.index();
        let set = &constraints[a];
        if set.axis != axis {
            return Err(CalibError::InvalidParameter(format!(
                "constraint set {a} is for {} but was passed for {axis}",
                set.axis
            )));
        }
        let d = DVector::from_iterator(p.y.nrows(), p.y.column(a).iter().copied());
        let assembled =
            assemble_from_regressors(&p.x, &d, set).map_err(|source| CalibError::Solver { axis, source })?;
        let solution = solve(&assembled.problem).map_err(|source| CalibError::Solver { axis, source })?;
        for k in 0..6 {
            c[(a, k)] = solution.x[k];
        }
        axes.push(AxisSolve { axis, assembled, solution });
    }
    let offset = p.offset(&c);
    let mut out = CalibrationMatrix::new(c, offset, p.representation, LinearMethod::ConstrainedQp);
    out.diagnostics = FitDiagnostics { rank, null_space_present: rank < 6, slack: None, axes };
    Ok(out)
}
