use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use super::{kkt_residuals, QpError, QpProblem, QpSolution};

/// Relative ridge added when `H` is only positive semidefinite.
const RIDGE_FACTOR: f64 = 1e-10;
/// Quadratic weight of the phase-1 auxiliary problem.
const PHASE_ONE_WEIGHT: f64 = 1e-9;

/// Minimizes `1/2 x'Hx + c'x` subject to `Ax <= b` with a primal active-set
/// method.
///
/// Starts from `x = 0` when `b >= 0`; otherwise a phase-1 problem finds a
/// feasible start. When several constraints could enter or leave the working
/// set the lowest index wins. At most `100 (n + m)` iterations are taken.
pub fn solve(p: &QpProblem) -> Result<QpSolution, QpError> {
    let n = p.n();
    let m = p.m();
    let (chol, ridge) = factor(&p.h)?;
    let (start, mut iterations) = if p.b.iter().all(|v| *v >= 0.0) {
        (DVector::zeros(n), 0)
    } else {
        phase_one(p)?
    };
    let run = active_set(&chol, &p.c, &p.a, &p.b, start, 100 * (n + m).max(1))?;
    iterations += run.iterations;

    let mut multipliers = DVector::zeros(m);
    for (k, &i) in run.working.iter().enumerate() {
        multipliers[i] = run.lambda[k];
    }
    let mut active_set = run.working.clone();
    active_set.sort_unstable();
    let kkt = kkt_residuals(p, &run.x, &multipliers);
    Ok(QpSolution { x: run.x, active_set, multipliers, kkt, iterations, ridge })
}

fn factor(h: &DMatrix<f64>) -> Result<(Cholesky<f64, Dyn>, Option<f64>), QpError> {
    let n = h.nrows();
    if n == 0 {
        return Err(QpError::NotPositiveDefinite);
    }
    let eig = h.clone().symmetric_eigenvalues();
    let top = eig.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let bottom = eig.iter().fold(f64::INFINITY, |a, v| a.min(*v));
    if top == 0.0 || bottom < -RIDGE_FACTOR * top {
        return Err(QpError::NotPositiveDefinite);
    }
    if bottom > RIDGE_FACTOR * top {
        if let Some(chol) = h.clone().cholesky() {
            return Ok((chol, None));
        }
    }
    let ridge = RIDGE_FACTOR * h.trace() / n as f64;
    let shifted = h + DMatrix::identity(n, n) * ridge;
    match shifted.cholesky() {
        Some(chol) => Ok((chol, Some(ridge))),
        None => Err(QpError::NotPositiveDefinite),
    }
}

struct ActiveSetRun {
    x: DVector<f64>,
    working: Vec<usize>,
    lambda: Vec<f64>,
    iterations: usize,
}

/// Equality-constrained step from `x` keeping the working rows tight:
/// `H p + A_W' l = -(H x + c)`, `A_W p = 0`.
fn working_step(
    chol: &Cholesky<f64, Dyn>,
    grad: &DVector<f64>,
    a: &DMatrix<f64>,
    working: &[usize],
) -> (DVector<f64>, Vec<f64>) {
    let z = chol.solve(grad);
    if working.is_empty() {
        return (-z, Vec::new());
    }
    let aw = rows(a, working);
    let y = chol.solve(&aw.transpose());
    let schur = &aw * &y;
    let rhs = -(&aw * &z);
    let lambda = solve_small(schur, &rhs);
    let p = -(z + &y * &lambda);
    (p, lambda.iter().copied().collect())
}

fn solve_small(m: DMatrix<f64>, rhs: &DVector<f64>) -> DVector<f64> {
    match m.clone().cholesky() {
        Some(c) => c.solve(rhs),
        None => m.lu().solve(rhs).unwrap_or_else(|| DVector::zeros(rhs.len())),
    }
}

fn rows(a: &DMatrix<f64>, idx: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(idx.len(), a.ncols(), |r, c| a[(idx[r], c)])
}

fn active_set(
    chol: &Cholesky<f64, Dyn>,
    c: &DVector<f64>,
    a: &DMatrix<f64>,
    b: &DVector<f64>,
    mut x: DVector<f64>,
    max_iterations: usize,
) -> Result<ActiveSetRun, QpError> {
    let m = b.len();
    let n = x.len();
    let mut working: Vec<usize> = Vec::new();
    let l = chol.l();
    let h = &l * l.transpose();
    let h_scale = h.amax().max(f64::MIN_POSITIVE);

    // Set after a full step: x then minimizes over the current working set.
    let mut stationary = false;
    for iteration in 1..=max_iterations {
        let grad = &h * &x + c;
        let (p, lambda) = working_step(chol, &grad, a, &working);
        let x_scale = 1.0 + x.amax();
        if stationary || p.amax() <= 1e-11 * x_scale {
            stationary = false;
            let lambda_tol = 1e-12 * (1.0 + c.amax() + h_scale * x_scale);
            let leaving = lambda
                .iter()
                .enumerate()
                .filter(|(_, l)| **l < -lambda_tol)
                .min_by(|(ka, la), (kb, lb)| {
                    la.partial_cmp(lb).unwrap().then(working[*ka].cmp(&working[*kb]))
                })
                .map(|(k, _)| k);
            match leaving {
                None => {
                    let (x, lambda) = polish(chol, c, a, b, x, &working, lambda);
                    return Ok(ActiveSetRun { x, working, lambda, iterations: iteration });
                }
                Some(k) => {
                    working.remove(k);
                }
            }
            continue;
        }
        let mut step = 1.0;
        let mut blocking = None;
        let p_norm = p.norm();
        for i in 0..m {
            if working.contains(&i) {
                continue;
            }
            let row = a.row(i);
            let ap = row.dot(&p.transpose());
            if ap > 1e-14 * row.norm() * p_norm {
                let ratio = ((b[i] - row.dot(&x.transpose())) / ap).max(0.0);
                if ratio < step {
                    step = ratio;
                    blocking = Some(i);
                }
            }
        }
        x += &p * step;
        match blocking {
            Some(i) => working.push(i),
            None => stationary = true,
        }
        debug_assert_eq!(x.len(), n);
    }
    Err(QpError::IterationLimit(max_iterations))
}

/// Re-solves the final equality system `H x + c + A_W' l = 0`, `A_W x = b_W`
/// so that working constraints hold to rounding; keeps the polished point
/// only if it is still feasible with nonnegative multipliers.
fn polish(
    chol: &Cholesky<f64, Dyn>,
    c: &DVector<f64>,
    a: &DMatrix<f64>,
    b: &DVector<f64>,
    x: DVector<f64>,
    working: &[usize],
    lambda: Vec<f64>,
) -> (DVector<f64>, Vec<f64>) {
    let zc = chol.solve(c);
    if working.is_empty() {
        let candidate = -zc;
        if feasible(a, b, &candidate) {
            return (candidate, lambda);
        }
        return (x, lambda);
    }
    let aw = rows(a, working);
    let bw = DVector::from_fn(working.len(), |k, _| b[working[k]]);
    let y = chol.solve(&aw.transpose());
    let schur = &aw * &y;
    let rhs = -(&aw * &zc) - bw;
    let l = solve_small(schur, &rhs);
    let candidate = -(zc + &y * &l);
    if l.iter().all(|v| *v >= 0.0) && feasible(a, b, &candidate) {
        (candidate, l.iter().copied().collect())
    } else {
        (x, lambda)
    }
}

fn feasible(a: &DMatrix<f64>, b: &DVector<f64>, x: &DVector<f64>) -> bool {
    let ax = a * x;
    ax.iter().zip(b.iter()).all(|(l, r)| *l <= r + 1e-12 * (1.0 + r.abs()))
}

/// Finds a feasible start by minimizing `t + eps/2 (|x|^2 + t^2)` subject to
/// `A x - t <= b`, `t >= 0`, starting from `x = 0` with `t` large enough.
fn phase_one(p: &QpProblem) -> Result<(DVector<f64>, usize), QpError> {
    let n = p.n();
    let m = p.m();
    let h1 = DMatrix::identity(n + 1, n + 1) * PHASE_ONE_WEIGHT;
    let chol = h1.cholesky().expect("diagonal positive");
    let mut c1 = DVector::zeros(n + 1);
    c1[n] = 1.0;
    let mut a1 = DMatrix::zeros(m + 1, n + 1);
    let mut b1 = DVector::zeros(m + 1);
    for i in 0..m {
        for j in 0..n {
            a1[(i, j)] = p.a[(i, j)];
        }
        a1[(i, n)] = -1.0;
        b1[i] = p.b[i];
    }
    a1[(m, n)] = -1.0;
    let mut start = DVector::zeros(n + 1);
    start[n] = p.b.iter().fold(0.0f64, |acc, v| acc.max(-v)) + 1.0;
    let run = active_set(&chol, &c1, &a1, &b1, start, 100 * (n + m + 2))?;
    let t = run.x[n];
    let mut x = run.x.rows(0, n).into_owned();
    let tight: Vec<usize> = run.working.iter().copied().filter(|&i| i < m).collect();
    refine_feasibility(&p.a, &p.b, &mut x, &tight);
    let violation = (&p.a * &x - &p.b).iter().fold(0.0f64, |acc, v| acc.max(*v));
    let tol = 1e-9 * (1.0 + p.b.amax());
    if violation > tol {
        return Err(QpError::Infeasible(violation.max(t)));
    }
    Ok((x, run.iterations))
}

/// The phase-1 iterate can miss its tight rows by rounding amplified by the
/// tiny phase-1 curvature. A few minimum-norm corrections onto the tight and
/// violated rows restore them to working precision.
fn refine_feasibility(a: &DMatrix<f64>, b: &DVector<f64>, x: &mut DVector<f64>, tight: &[usize]) {
    for _ in 0..4 {
        let slack = a * &*x - b;
        let mut rows_v: Vec<usize> = tight.to_vec();
        rows_v.extend((0..b.len()).filter(|&i| slack[i] > 0.0 && !tight.contains(&i)));
        if rows_v.is_empty() || rows_v.iter().all(|&i| slack[i].abs() <= 1e-15 * (1.0 + b[i].abs())) {
            return;
        }
        let av = rows(a, &rows_v);
        let r = DVector::from_fn(rows_v.len(), |k, _| -slack[rows_v[k]]);
        let svd = av.svd(true, true);
        let cutoff = 1e-12 * svd.singular_values.max();
        match svd.solve(&r, cutoff) {
            Ok(delta) => *x += delta,
            Err(_) => return,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{dmatrix, dvector};

    #[test]
    fn unconstrained_minimum() {
        let p = QpProblem::unconstrained(dmatrix![2.0, 0.0; 0.0, 2.0], dvector![-2.0, -2.0]).unwrap();
        let s = solve(&p).unwrap();
        assert!((s.x - dvector![1.0, 1.0]).amax() < 1e-14);
        assert!(s.active_set.is_empty());
    }

    #[test]
    fn single_active_constraint() {
        let p = QpProblem::new(dmatrix![2.0, 0.0; 0.0, 2.0], dvector![-2.0, -2.0], dmatrix![1.0, 1.0], dvector![1.0])
            .unwrap();
        let s = solve(&p).unwrap();
        assert!((s.x - dvector![0.5, 0.5]).amax() < 1e-14);
        assert_eq!(s.active_set, vec![0]);
        assert!((s.multipliers[0] - 1.0).abs() < 1e-14);
        assert!(s.kkt.max() <= 1e-12);
    }

    #[test]
    fn negative_bounds_go_through_phase_one() {
        // x >= 2 and y >= 3 written as -x <= -2, -y <= -3.
        let p = QpProblem::new(
            DMatrix::identity(2, 2),
            dvector![0.0, 0.0],
            dmatrix![-1.0, 0.0; 0.0, -1.0],
            dvector![-2.0, -3.0],
        )
        .unwrap();
        let s = solve(&p).unwrap();
        assert!((s.x - dvector![2.0, 3.0]).amax() < 1e-10);
        assert_eq!(s.active_set, vec![0, 1]);
        assert!(s.kkt.max() < 1e-9);
    }

    #[test]
    fn contradictory_bounds_are_infeasible() {
        let p = QpProblem::new(
            DMatrix::identity(1, 1),
            dvector![0.0],
            dmatrix![1.0; -1.0],
            dvector![-1.0, -1.0],
        )
        .unwrap();
        assert!(matches!(solve(&p), Err(QpError::Infeasible(_))));
    }

    #[test]
    fn indefinite_cost_is_rejected() {
        let p = QpProblem::unconstrained(dmatrix![1.0, 0.0; 0.0, -1.0], dvector![0.0, 0.0]).unwrap();
        assert_eq!(solve(&p), Err(QpError::NotPositiveDefinite));
    }

    #[test]
    fn semidefinite_cost_gets_ridge() {
        let p = QpProblem::new(
            dmatrix![2.0, 2.0; 2.0, 2.0],
            dvector![-2.0, -2.0],
            dmatrix![1.0, 0.0; 0.0, 1.0],
            dvector![10.0, 10.0],
        )
        .unwrap();
        let s = solve(&p).unwrap();
        assert!(s.ridge.is_some());
        assert!((s.x[0] + s.x[1] - 1.0).abs() < 1e-6);
    }

    #[test]
    fn deterministic_repeat() {
        let p = QpProblem::new(
            dmatrix![4.0, 1.0; 1.0, 3.0],
            dvector![-1.0, 2.0],
            dmatrix![1.0, 1.0; -1.0, 2.0; 0.5, -1.0],
            dvector![0.2, 0.1, 0.3],
        )
        .unwrap();
        let a = solve(&p).unwrap();
        let b = solve(&p).unwrap();
        assert_eq!(a, b);
    }
}
