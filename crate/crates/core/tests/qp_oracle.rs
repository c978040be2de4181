mod common;

use common::{brute_force_qp, random_problem, rng};
use ftcal::qp::{solve, QpProblem};
use nalgebra::{DMatrix, DVector};
use rand::Rng;

fn to_problem(h: &common::Mat, c: &[f64], a: &common::Mat, b: &[f64]) -> QpProblem {
    let n = c.len();
    QpProblem::new(
        DMatrix::from_fn(n, n, |i, j| h[i][j]),
        DVector::from_column_slice(c),
        DMatrix::from_fn(a.len(), n, |i, j| a[i][j]),
        DVector::from_column_slice(b),
    )
    .unwrap()
}

#[test]
fn random_problems_match_enumeration() {
    let mut r = rng(2024);
    let mut worst = 0.0f64;
    for _ in 0..300 {
        let n = r.gen_range(1..=8);
        let m = r.gen_range(0..=6);
        let (h, c, a, b) = random_problem(&mut r, n, m);
        let (xo, co) = brute_force_qp(&h, &c, &a, &b).expect("feasible by construction");
        let s = solve(&to_problem(&h, &c, &a, &b)).unwrap();
        let dx = s.x.iter().zip(&xo).fold(0.0f64, |acc, (p, q)| acc.max((p - q).abs()));
        let cost = common::qp_cost(&h, &c, s.x.as_slice());
        assert!(dx < 1e-8, "x differs by {dx}");
        assert!((cost - co).abs() < 1e-8 * (1.0 + co.abs()));
        assert!(s.kkt.max() <= 1e-8, "{:?}", s.kkt);
        worst = worst.max(dx);
    }
    eprintln!("worst x deviation {worst:e}");
}

#[test]
fn negative_bounds_start_from_phase_one() {
    let mut r = rng(7);
    for _ in 0..100 {
        let n = r.gen_range(1..=6);
        let m = r.gen_range(1..=6);
        let (h, c, a, _) = random_problem(&mut r, n, m);
        // feasible point far from the origin so that some b are negative
        let feasible: Vec<f64> = (0..n).map(|_| r.gen_range(2.0..4.0)).collect();
        let af = common::mat_vec(&a, &feasible);
        let b: Vec<f64> = af.iter().map(|v| v + r.gen_range(0.0..0.1)).collect();
        let (xo, _) = brute_force_qp(&h, &c, &a, &b).unwrap();
        let s = solve(&to_problem(&h, &c, &a, &b)).unwrap();
        let dx = s.x.iter().zip(&xo).fold(0.0f64, |acc, (p, q)| acc.max((p - q).abs()));
        assert!(dx < 1e-8, "x differs by {dx}");
        assert!(s.kkt.max() <= 1e-8, "{:?}", s.kkt);
    }
}

#[test]
fn oracle_agrees_on_hand_problem() {
    let h = vec![vec![2.0, 0.0], vec![0.0, 2.0]];
    let (x, cost) = brute_force_qp(&h, &[-2.0, -2.0], &vec![vec![1.0, 1.0]], &[1.0]).unwrap();
    assert!((x[0] - 0.5).abs() < 1e-14 && (x[1] - 0.5).abs() < 1e-14);
    assert!((cost + 1.5).abs() < 1e-14);
}
