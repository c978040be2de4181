use nalgebra::{DMatrix, DVector, Matrix6, Vector6};

use super::{center, check_representation, column_means, CalibError, CalibrationMatrix, FitDiagnostics, LinearMethod, OffsetMode};
use crate::model::Representation;
use crate::Dataset;

/// Gram-matrix eigenvalues below this fraction of the largest one count as
/// zero; singular values are compared against its square root.
pub const RANK_TOLERANCE: f64 = 1e-10;

/// Regressors and targets ready for a linear fit.
pub(crate) struct Prepared {
    pub x: DMatrix<f64>,
    pub y: DMatrix<f64>,
    pub x_mean: DVector<f64>,
    pub y_mean: DVector<f64>,
    pub representation: Representation,
}

pub(crate) fn prepare(data: &Dataset, mode: OffsetMode, needed: usize) -> Result<Prepared, CalibError> {
    if data.len() < needed {
        return Err(CalibError::InsufficientData { needed, got: data.len() });
    }
    let representation = check_representation(data)?;
    let x = data.sensor_matrix();
    let y = data.wrench_matrix();
    let (x_mean, y_mean) = match mode {
        OffsetMode::Fit => (column_means(&x), column_means(&y)),
        OffsetMode::Zero => (DVector::zeros(x.ncols()), DVector::zeros(y.ncols())),
    };
    let (x, y) = match mode {
        OffsetMode::Fit => (center(&x, &x_mean), center(&y, &y_mean)),
        OffsetMode::Zero => (x, y),
    };
    Ok(Prepared { x, y, x_mean, y_mean, representation })
}

impl Prepared {
    /// Offset that maps the regressor mean onto the target mean.
    pub fn offset(&self, c: &Matrix6<f64>) -> Vector6<f64> {
        let xm = Vector6::from_iterator(self.x_mean.iter().copied());
        let ym = Vector6::from_iterator(self.y_mean.iter().copied());
        ym - c * xm
    }

    /// Numerical rank of the regressors under [`RANK_TOLERANCE`].
    pub fn rank(&self) -> usize {
        let sv = self.x.clone().singular_values();
        let top = sv.max();
        if top == 0.0 {
            return 0;
        }
        let tol = RANK_TOLERANCE.sqrt() * top;
        sv.iter().filter(|s| **s > tol).count()
    }
}

/// Least-squares calibration with a fitted offset.
pub fn calibrate_pseudo_inverse(data: &Dataset) -> Result<CalibrationMatrix, CalibError> {
    calibrate_pseudo_inverse_with(data, OffsetMode::Fit)
}

/// Least squares through the pseudo-inverse. When the frames do not span all
/// six sensor directions the minimum-norm solution is returned and
/// `diagnostics.null_space_present` is set.
pub fn calibrate_pseudo_inverse_with(data: &Dataset, mode: OffsetMode) -> Result<CalibrationMatrix, CalibError> {
    let p = prepare(data, mode, 6)?;
    let svd = p.x.clone().svd(true, true);
    let top = svd.singular_values.max();
    let cutoff = RANK_TOLERANCE.sqrt() * top;
    let rank = svd.singular_values.iter().filter(|s| **s > cutoff).count();
    let beta = if top == 0.0 {
        DMatrix::zeros(6, 6)
    } else {
        svd.solve(&p.y, cutoff).expect("both SVD factors computed")
    };
    let c = Matrix6::from_fn(|r, k| beta[(k, r)]);
    let offset = p.offset(&c);
    let mut out = CalibrationMatrix::new(c, offset, p.representation, LinearMethod::PseudoInverse);
    out.diagnostics = FitDiagnostics { rank, null_space_present: rank < 6, slack: None, axes: Vec::new() };
    Ok(out)
}
