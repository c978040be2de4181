use nalgebra::{DMatrix, Matrix6, Vector6};

use super::{ModelError, Wrench, DEFAULT_FULL_SCALE};

/// FEM ratios of screen distance change per loaded axis. Rows are the loaded
/// axis (Fx..Mz), columns are sensors 1..6.
pub const FEM_DISPLACEMENT_RATIOS: [[f64; 6]; 6] = [
    [0.03, -0.09, -4.29, 119.30, 4.32, -116.79],
    [5.01, -117.80, -2.41, 59.10, -2.44, 82.62],
    [124.60, -0.79, 124.60, -0.34, 124.60, -4.92],
    [15.76, -41.04, -81.90, 18.96, 67.66, 17.37],
    [88.10, -0.70, -27.98, -32.13, -54.08, 33.15],
    [-4.23, 70.82, -4.23, 70.83, -4.26, 71.00],
];

/// Screen travel (mm) produced by a full-scale single-axis load under the
/// default scale.
pub const DEFAULT_FULL_SCALE_TRAVEL_MM: f64 = 0.1;

/// Linear map from wrench to the six screen displacements.
///
/// `ratios[i][j]` is the response of sensor `j` to a unit of axis `i`;
/// `scale[i]` converts ratio units to millimeters per N (or per N*m) for axis
/// `i`. Sensor `j` therefore moves `sum_i scale[i] * ratios[i][j] * w[i]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplianceMap {
    ratios: Matrix6<f64>,
    scale: [f64; 6],
}

impl ComplianceMap {
    pub fn from_table(ratios: Matrix6<f64>, scale: [f64; 6]) -> Result<ComplianceMap, ModelError> {
        if ratios.iter().any(|v| !v.is_finite()) {
            return Err(ModelError::NonFinite("compliance ratios".into()));
        }
        if scale.iter().any(|v| !v.is_finite()) {
            return Err(ModelError::NonFinite("compliance scale".into()));
        }
        if scale.iter().any(|&v| v == 0.0) {
            return Err(ModelError::RankDeficient { rank: scale.iter().filter(|v| **v != 0.0).count() });
        }
        let rank = numerical_rank(&DMatrix::from_iterator(6, 6, ratios.iter().copied()));
        if rank < 6 {
            return Err(ModelError::RankDeficient { rank });
        }
        Ok(ComplianceMap { ratios, scale })
    }

    /// Same scale on every axis.
    pub fn with_uniform_scale(ratios: Matrix6<f64>, scale: f64) -> Result<ComplianceMap, ModelError> {
        ComplianceMap::from_table(ratios, [scale; 6])
    }

    /// FEM ratio table with the default per-axis scale: a full-scale load on
    /// any single axis moves the most responsive screen by 0.1 mm.
    pub fn fem_default() -> ComplianceMap {
        let ratios = fem_ratios();
        let scale = travel_scale(&ratios, &DEFAULT_FULL_SCALE, DEFAULT_FULL_SCALE_TRAVEL_MM);
        ComplianceMap::from_table(ratios, scale).expect("FEM table is full rank")
    }

    pub fn ratios(&self) -> &Matrix6<f64> {
        &self.ratios
    }

    pub fn scale(&self) -> [f64; 6] {
        self.scale
    }

    /// The 6x6 matrix `M` with `d = M w` (rows: sensors, columns: axes).
    pub fn matrix(&self) -> Matrix6<f64> {
        let mut m = self.ratios.transpose();
        for (i, s) in self.scale.iter().enumerate() {
            m.column_mut(i).scale_mut(*s);
        }
        m
    }

    /// Screen displacements in millimeters.
    pub fn displacements(&self, w: &Wrench) -> Vector6<f64> {
        self.matrix() * w.to_vector()
    }

    /// Inverse of [`matrix`](Self::matrix): the wrench that produces a given
    /// displacement vector. Rows: axes, columns: sensors.
    pub fn inverse(&self) -> Matrix6<f64> {
        self.matrix().try_inverse().expect("compliance validated as full rank")
    }
}

pub(crate) fn fem_ratios() -> Matrix6<f64> {
    Matrix6::from_fn(|i, j| FEM_DISPLACEMENT_RATIOS[i][j])
}

/// Per-axis scale so that a load of `full_scale[i]` on axis `i` moves the most
/// responsive screen by `travel_mm`.
pub fn travel_scale(ratios: &Matrix6<f64>, full_scale: &[f64; 6], travel_mm: f64) -> [f64; 6] {
    let mut scale = [0.0; 6];
    for (i, s) in scale.iter_mut().enumerate() {
        let peak = ratios.row(i).amax();
        *s = travel_mm / (full_scale[i] * peak);
    }
    scale
}

/// Numerical rank from the singular values, with the usual
/// `max(rows, cols) * eps * sigma_max` cutoff.
pub fn numerical_rank(m: &DMatrix<f64>) -> usize {
    if m.is_empty() {
        return 0;
    }
    let sv = m.clone().singular_values();
    let top = sv.max();
    if top == 0.0 {
        return 0;
    }
    let tol = m.nrows().max(m.ncols()) as f64 * f64::EPSILON * top;
    sv.iter().filter(|s| **s > tol).count()
}
