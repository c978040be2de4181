use nalgebra::{DMatrix, DVector, Matrix6};

use crate::model::ComplianceMap;
use crate::{Axis, AXES};

/// Inequalities `A x <= b` on one calibration row `x` (columns: sensors 1..6).
#[derive(Debug, Clone, PartialEq)]
pub struct ConstraintSet {
    pub axis: Axis,
    pub a: DMatrix<f64>,
    pub b: DVector<f64>,
}

impl ConstraintSet {
    pub fn empty(axis: Axis) -> ConstraintSet {
        ConstraintSet { axis, a: DMatrix::zeros(0, 6), b: DVector::zeros(0) }
    }

    pub fn new(axis: Axis, a: DMatrix<f64>, b: DVector<f64>) -> Result<ConstraintSet, String> {
        if a.ncols() != 6 && a.nrows() > 0 {
            return Err(format!("constraint matrix has {} columns, expected 6", a.ncols()));
        }
        if a.nrows() != b.len() {
            return Err(format!("{} constraint rows but {} bounds", a.nrows(), b.len()));
        }
        if a.iter().chain(b.iter()).any(|v| !v.is_finite()) {
            return Err("non-finite constraint entry".into());
        }
        let a = if a.nrows() == 0 { DMatrix::zeros(0, 6) } else { a };
        Ok(ConstraintSet { axis, a, b })
    }

    pub fn len(&self) -> usize {
        self.b.len()
    }

    pub fn is_empty(&self) -> bool {
        self.b.is_empty()
    }

    /// Largest violation `max(0, A x - b)`.
    pub fn violation(&self, x: &DVector<f64>) -> f64 {
        if self.is_empty() {
            return 0.0;
        }
        (&self.a * x - &self.b).iter().fold(0.0f64, |acc, v| acc.max(*v))
    }

    pub fn empty_all() -> [ConstraintSet; 6] {
        AXES.map(ConstraintSet::empty)
    }
}

/// One structural relation `x[member] = ratio * x[reference]` on a row of the
/// calibration matrix. One-sided relations only bound the member's magnitude
/// from above.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Relation {
    pub axis: Axis,
    /// Sensor index, 0-based.
    pub member: usize,
    pub reference: usize,
    pub ratio: f64,
    pub one_sided: bool,
}

impl Relation {
    pub fn describe(&self) -> String {
        if self.one_sided {
            format!(
                "{}: |S{}| <= {:.6} |S{}|",
                self.axis,
                self.member + 1,
                self.ratio.abs(),
                self.reference + 1
            )
        } else {
            format!("{}: S{} = {:.6} S{}", self.axis, self.member + 1, self.ratio, self.reference + 1)
        }
    }
}

/// Constraint sets for all six axes plus the geometry constants they encode.
#[derive(Debug, Clone, PartialEq)]
pub struct StructuralConstraints {
    pub sets: [ConstraintSet; 6],
    pub relations: Vec<Relation>,
    pub slack: f64,
    /// `S4 = a1 * S2` on the Fy row.
    pub a1: f64,
    /// `S1 = -a2 * S3` on the My row.
    pub a2: f64,
}

/// Relation pairs `(member, reference)` per axis, 0-based sensors.
const PAIRS: [&[(usize, usize)]; 6] = [
    &[(3, 5), (2, 4)],
    &[(3, 1), (5, 1)],
    &[(0, 2), (2, 4)],
    &[(2, 4)],
    &[(0, 2), (4, 2)],
    &[(1, 3), (3, 5)],
];

/// Weak shear sensor bounded against the dominant Fx pair.
const FX_WEAK_SENSOR: usize = 1;

/// Builds the structural constraints from the ideal calibration matrix
/// `C0 = M^-1` of `compliance`.
///
/// Every equality relation `x_m - k x_r = 0` with `k = C0[a][m] / C0[a][r]` is
/// scaled to unit max coefficient and emitted as the pair `r <= b`, `-r <= b`.
/// The Fx row also gets one dominance row keeping the weak sensor 2 below
/// its ideal share of the dominant sensor. Bounds are `slack` on Fx and
/// `slack * |C0_a|inf / |C0_Fx|inf` on the other axes, so every relation
/// holds exactly on `C0` and its multiples.
pub fn default_constraints(compliance: &ComplianceMap, slack: f64) -> StructuralConstraints {
    let c0 = compliance.inverse();
    let norm = |a: usize| c0.row(a).amax();
    let fx_norm = norm(0);
    let mut relations = Vec::new();
    let sets = AXES.map(|axis| {
        let a = axis.index();
        let bound = if a == 0 { slack } else { slack * norm(a) / fx_norm };
        let mut rows: Vec<[f64; 6]> = Vec::new();
        for &(m, r) in PAIRS[a] {
            let ratio = c0[(a, m)] / c0[(a, r)];
            relations.push(Relation { axis, member: m, reference: r, ratio, one_sided: false });
            let mut row = [0.0; 6];
            row[m] = 1.0;
            row[r] = -ratio;
            let scale = row.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
            let row = row.map(|v| v / scale);
            rows.push(row);
            rows.push(row.map(|v| -v));
        }
        if a == 0 {
            rows.push(dominance_row(&c0, &mut relations));
        }
        let m = rows.len();
        let amat = DMatrix::from_fn(m, 6, |i, j| rows[i][j]);
        ConstraintSet { axis, a: amat, b: DVector::from_element(m, bound) }
    });
    let a1 = c0[(1, 3)] / c0[(1, 1)];
    let a2 = -c0[(4, 0)] / c0[(4, 2)];
    StructuralConstraints { sets, relations, slack, a1, a2 }
}

fn dominance_row(c0: &Matrix6<f64>, relations: &mut Vec<Relation>) -> [f64; 6] {
    let (m0, r0) = PAIRS[0][0];
    let anchor = if c0[(0, m0)].abs() >= c0[(0, r0)].abs() { m0 } else { r0 };
    let weak = FX_WEAK_SENSOR;
    let ratio = c0[(0, weak)] / c0[(0, anchor)];
    relations.push(Relation { axis: Axis::Fx, member: weak, reference: anchor, ratio, one_sided: true });
    let mut row = [0.0; 6];
    row[weak] = c0[(0, weak)].signum();
    row[anchor] = -ratio.abs() * c0[(0, anchor)].signum();
    let scale = row.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
    row.map(|v| v / scale)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fx_set_has_five_rows_with_slack_bounds() {
        let s = default_constraints(&ComplianceMap::fem_default(), 100.0);
        assert_eq!(s.sets[0].len(), 5);
        assert_eq!(s.sets[0].b.as_slice(), &[100.0; 5]);
    }

    #[test]
    fn relations_hold_on_ideal_rows() {
        let cm = ComplianceMap::fem_default();
        let c0 = cm.inverse();
        let s = default_constraints(&cm, 1.0);
        for a in 0..6 {
            for scale in [1.0, -0.37, 250.0] {
                let x: DVector<f64> = DVector::from_iterator(6, c0.row(a).iter().map(|v| v * scale));
                let ax = &s.sets[a].a * &x;
                for v in ax.iter() {
                    assert!(*v <= 1e-9 * x.amax(), "axis {a}: {v}");
                }
            }
        }
    }

    #[test]
    fn pair_rows_are_symmetric_and_unit_scaled() {
        let s = default_constraints(&ComplianceMap::fem_default(), 5.0);
        for set in &s.sets {
            let pairs = set.len() / 2;
            for k in 0..pairs {
                let r0 = set.a.row(2 * k);
                let r1 = set.a.row(2 * k + 1);
                assert_eq!(r0, -r1);
                assert!((r0.amax() - 1.0).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn fz_rows_link_odd_sensors() {
        let s = default_constraints(&ComplianceMap::fem_default(), 1.0);
        let fz = &s.sets[2];
        assert_eq!(fz.len(), 4);
        let support = |r: usize| -> Vec<usize> { (0..6).filter(|&j| fz.a[(r, j)] != 0.0).collect() };
        assert_eq!(support(0), vec![0, 2]);
        assert_eq!(support(2), vec![2, 4]);
    }

    #[test]
    fn symmetric_normal_response_gives_exact_equalities() {
        // Orthogonal normal-sensor responses, shear sensors decoupled.
        let table = [
            [0.0, 1.0, 0.0, 0.0, 0.0, 0.0],
            [0.0, 0.0, 0.0, 1.0, 0.0, 0.0],
            [1.0, 0.0, 1.0, 0.0, 1.0, 0.0],
            [0.0, 0.0, 1.0, 0.0, -1.0, 0.0],
            [2.0, 0.0, -1.0, 0.0, -1.0, 0.0],
            [0.0, 0.0, 0.0, 0.0, 0.0, 1.0],
        ];
        let ratios = Matrix6::from_fn(|i, j| table[i][j]);
        let cm = ComplianceMap::with_uniform_scale(ratios, 1.0).unwrap();
        let s = default_constraints(&cm, 1.0);
        let fz = &s.sets[2];
        assert!((fz.a[(0, 0)] - 1.0).abs() < 1e-12 && (fz.a[(0, 2)] + 1.0).abs() < 1e-12);
        assert!((fz.a[(2, 2)] - 1.0).abs() < 1e-12 && (fz.a[(2, 4)] + 1.0).abs() < 1e-12);
    }

    #[test]
    fn geometry_constants_near_placement_factor() {
        let s = default_constraints(&ComplianceMap::fem_default(), 1.0);
        assert!((s.a1.abs() - 0.5).abs() < 0.05, "a1 = {}", s.a1);
        assert!(s.a2.is_finite() && s.a2 != 0.0);
        assert_eq!(s.relations.len(), 12);
        assert_eq!(s.relations.iter().filter(|r| r.one_sided).count(), 1);
    }

    #[test]
    fn constructor_validates_shapes() {
        assert!(ConstraintSet::new(Axis::Fx, DMatrix::zeros(2, 5), DVector::zeros(2)).is_err());
        assert!(ConstraintSet::new(Axis::Fx, DMatrix::zeros(2, 6), DVector::zeros(3)).is_err());
        assert!(ConstraintSet::new(Axis::Fx, DMatrix::zeros(0, 0), DVector::zeros(0)).unwrap().is_empty());
    }
}
