//! Published reference values, kept verbatim.

use nalgebra::{DMatrix, DVector, Matrix6};

use super::ConstraintSet;
use crate::Axis;

/// Pseudo-inverse calibration matrix of the prototype (ADC counts in, rows
/// Fx..Mz, columns sensors 1..6).
pub const PUBLISHED_PSEUDO_INVERSE_MATRIX: [[f64; 6]; 6] = [
    [-483.0, 2618.0, 164.0, -1.0, 581.0, -2389.0],
    [1292.0, -1668.0, 3245.0, -2392.0, -799.0, 2144.0],
    [1867.0, -6848.0, -4082.0, 2232.0, -8988.0, 7034.0],
    [-281.0, 121.0, -86.0, 163.0, 151.0, -262.0],
    [135.0, 300.0, -280.0, 262.0, 230.0, -112.0],
    [585.0, -451.0, -395.0, 260.0, 107.0, -328.0],
];

/// Structurally constrained calibration matrix of the prototype.
pub const PUBLISHED_CONSTRAINED_MATRIX: [[f64; 6]; 6] = [
    [885.0, -187.0, 884.0, 242.0, -1774.0, -0.0],
    [2398.0, 148.0, -2362.0, 148.0, 41.0, -231.0],
    [-2418.0, -2329.0, -3718.0, -161.0, -2156.0, -367.0],
    [-308.0, -78.0, 355.0, -85.0, 220.0, -232.0],
    [173.0, 77.0, 83.0, 103.0, -274.0, -2.0],
    [444.0, -810.0, 438.0, -310.0, 442.0, -530.0],
];

/// Fx-axis structural constraint matrix as printed. Its columns are in the
/// sensor order given by [`PUBLISHED_FX_CONSTRAINT_COLUMNS`].
pub const PUBLISHED_FX_CONSTRAINT_A: [[f64; 6]; 5] = [
    [231.0, 0.0, 232.0, 0.0, -28851.0, 0.0],
    [0.0, 8.56, 0.0, 8.38, 0.0, 0.0],
    [0.0, -8.56, 0.0, -8.38, 0.0, 0.0],
    [0.0, 0.0, 0.0, -8.38, 0.0, -10689.0],
    [0.0, 0.0, 0.0, 8.38, 0.0, 10689.0],
];

pub const PUBLISHED_FX_CONSTRAINT_B: [f64; 5] = [100.0; 5];

/// Sensor number (1-based) of each printed column of the Fx constraint
/// matrix.
pub const PUBLISHED_FX_CONSTRAINT_COLUMNS: [usize; 6] = [4, 3, 6, 5, 2, 1];

/// Qualitative response of each sensor (columns) to each loaded axis (rows):
/// `+`, `-` or `~` for little or no variation. Doubled signs are folded into
/// single ones.
pub const NOMINAL_SIGN_PATTERN: [&str; 6] = [
    "~ ~ ~ + ~ -",
    "~ + ~ - ~ +",
    "- ~ - ~ - ~",
    "~ ~ + ~ - ~",
    "+ ~ - - ~ ~",
    "~ + ~ + ~ +",
];

pub fn published_pseudo_inverse() -> Matrix6<f64> {
    Matrix6::from_fn(|r, c| PUBLISHED_PSEUDO_INVERSE_MATRIX[r][c])
}

pub fn published_constrained() -> Matrix6<f64> {
    Matrix6::from_fn(|r, c| PUBLISHED_CONSTRAINED_MATRIX[r][c])
}

/// The printed Fx constraints with columns as printed.
pub fn published_fx_constraints_verbatim() -> ConstraintSet {
    ConstraintSet {
        axis: Axis::Fx,
        a: DMatrix::from_fn(5, 6, |r, c| PUBLISHED_FX_CONSTRAINT_A[r][c]),
        b: DVector::from_row_slice(&PUBLISHED_FX_CONSTRAINT_B),
    }
}

/// The printed Fx constraints with columns moved into sensor order 1..6
/// according to the stated column mapping.
pub fn published_fx_constraints_sensor_order() -> ConstraintSet {
    let mut a = DMatrix::zeros(5, 6);
    for (printed, &sensor) in PUBLISHED_FX_CONSTRAINT_COLUMNS.iter().enumerate() {
        for r in 0..5 {
            a[(r, sensor - 1)] = PUBLISHED_FX_CONSTRAINT_A[r][printed];
        }
    }
    ConstraintSet { axis: Axis::Fx, a, b: DVector::from_row_slice(&PUBLISHED_FX_CONSTRAINT_B) }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn column_mapping_is_a_permutation() {
        let mut seen = PUBLISHED_FX_CONSTRAINT_COLUMNS;
        seen.sort_unstable();
        assert_eq!(seen, [1, 2, 3, 4, 5, 6]);
    }

    #[test]
    fn sensor_order_moves_columns() {
        let s = published_fx_constraints_sensor_order();
        // printed column 5 is sensor 2
        assert_eq!(s.a[(0, 1)], -28851.0);
        // printed column 1 is sensor 4
        assert_eq!(s.a[(0, 3)], 231.0);
        assert_eq!(s.a[(3, 0)], -10689.0);
        assert_eq!(s.b.as_slice(), &[100.0; 5]);
    }
}
