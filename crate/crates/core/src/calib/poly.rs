use nalgebra::{DMatrix, DVector};

use super::{center, check_representation, column_means, CalibError, Calibrator};
use crate::model::{Representation, Wrench};
use crate::Dataset;

/// Ridge-regularized linear or linear-plus-squared calibration.
#[derive(Debug, Clone, PartialEq)]
pub struct PolyCalibrator {
    pub degree: usize,
    /// 6 x 6 (degree 1) or 6 x 12 (degree 2: `s` then `s^2`).
    pub coefficients: DMatrix<f64>,
    pub offset: DVector<f64>,
    pub lambda: f64,
    pub representation: Representation,
}

fn features(values: &[f64], degree: usize) -> impl Iterator<Item = f64> + '_ {
    values.iter().copied().chain(values.iter().map(|v| v * v).take(if degree == 2 { 6 } else { 0 }))
}

/// Minimizes `sum |w - K phi(s) - k0|^2 + lambda |K|^2` in closed form. The
/// offset `k0` is not penalized.
pub fn calibrate_regularized(data: &Dataset, lambda: f64, degree: usize) -> Result<PolyCalibrator, CalibError> {
    if !(lambda >= 0.0) || !lambda.is_finite() {
        return Err(CalibError::InvalidParameter(format!("lambda must be finite and >= 0, got {lambda}")));
    }
    if degree != 1 && degree != 2 {
        return Err(CalibError::InvalidParameter(format!("degree must be 1 or 2, got {degree}")));
    }
    let k = 6 * degree;
    if data.len() < k {
        return Err(CalibError::InsufficientData { needed: k, got: data.len() });
    }
    let representation = check_representation(data)?;
    let n = data.len();
    let phi = DMatrix::from_row_iterator(n, k, data.frames().flat_map(|f| features(&f.values, degree).collect::<Vec<_>>()));
    let y = data.wrench_matrix();
    let phi_mean = column_means(&phi);
    let y_mean = column_means(&y);
    let phi_c = center(&phi, &phi_mean);
    let y_c = center(&y, &y_mean);

    let beta = if lambda > 0.0 {
        let gram = phi_c.transpose() * &phi_c + DMatrix::identity(k, k) * lambda;
        let rhs = phi_c.transpose() * &y_c;
        gram.cholesky().map(|c| c.solve(&rhs)).ok_or_else(|| CalibError::InvalidParameter("ridge system not positive definite".into()))?
    } else {
        let svd = phi_c.clone().svd(true, true);
        let cutoff = super::RANK_TOLERANCE.sqrt() * svd.singular_values.max();
        svd.solve(&y_c, cutoff).expect("both SVD factors computed")
    };
    let coefficients = beta.transpose();
    let offset = &y_mean - &coefficients * &phi_mean;
    Ok(PolyCalibrator { degree, coefficients, offset, lambda, representation })
}

impl Calibrator for PolyCalibrator {
    fn input_representation(&self) -> Representation {
        self.representation
    }

    fn estimate(&self, values: &[f64; 6]) -> Wrench {
        let phi = DVector::from_iterator(6 * self.degree, features(values, self.degree));
        let w = &self.coefficients * phi + &self.offset;
        Wrench::from_array(std::array::from_fn(|i| w[i]))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::calib::calibrate_pseudo_inverse;
    use nalgebra::Vector6;

    fn data(quadratic: bool) -> Dataset {
        let frames: Vec<[f64; 6]> = (0..60)
            .map(|k| std::array::from_fn(|j| (((k + 1) * (j + 3) * 5) % 17) as f64 * 0.05 + 0.01 * k as f64))
            .collect();
        let wrenches: Vec<Wrench> = frames
            .iter()
            .map(|f| {
                let v = Vector6::from(*f);
                let sq = v.map(|x| x * x);
                Wrench::from_vector(&(v * 2.0 + if quadratic { sq * 0.7 } else { Vector6::zeros() }))
            })
            .collect();
        Dataset::from_arrays(&frames, &wrenches, Representation::Volts, 1.0).unwrap()
    }

    #[test]
    fn zero_lambda_degree_one_is_least_squares() {
        let d = data(true);
        let poly = calibrate_regularized(&d, 0.0, 1).unwrap();
        let pi = calibrate_pseudo_inverse(&d).unwrap();
        for r in 0..6 {
            for c in 0..6 {
                assert!((poly.coefficients[(r, c)] - pi.matrix[(r, c)]).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn huge_lambda_shrinks_coefficients() {
        let d = data(false);
        let free = calibrate_regularized(&d, 0.0, 1).unwrap();
        let tight = calibrate_regularized(&d, 1e9, 1).unwrap();
        assert!(tight.coefficients.norm() <= 1e-6 * free.coefficients.norm());
    }

    #[test]
    fn degree_two_fits_squares() {
        let d = data(true);
        let p = calibrate_regularized(&d, 0.0, 2).unwrap();
        assert_eq!(p.coefficients.shape(), (6, 12));
        let s = d.samples()[7].clone();
        let w = p.estimate(&s.frame.values);
        assert!((w.to_vector() - s.wrench.to_vector()).amax() < 1e-8);
    }

    #[test]
    fn rejects_bad_parameters() {
        let d = data(false);
        assert!(calibrate_regularized(&d, -1.0, 1).is_err());
        assert!(calibrate_regularized(&d, 0.0, 3).is_err());
    }
}
