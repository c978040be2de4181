use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector};

use super::QpError;

#[derive(Debug, Clone, PartialEq)]
pub struct QpProblem {
    pub h: DMatrix<f64>,
    pub c: DVector<f64>,
    pub a: DMatrix<f64>,
    pub b: DVector<f64>,
}

impl QpProblem {
    /// Validates shapes, finiteness and symmetry of `h`. Positive
    /// definiteness is checked by the solver.
    pub fn new(
        h: DMatrix<f64>,
        c: DVector<f64>,
        a: DMatrix<f64>,
        b: DVector<f64>,
    ) -> Result<QpProblem, QpError> {
        let n = c.len();
        if h.nrows() != n || h.ncols() != n {
            return Err(QpError::DimensionMismatch(format!(
                "H is {}x{} but c has {n} entries",
                h.nrows(),
                h.ncols()
            )));
        }
        if a.ncols() != n && a.nrows() > 0 {
            return Err(QpError::DimensionMismatch(format!("A has {} columns, expected {n}", a.ncols())));
        }
        if a.nrows() != b.len() {
            return Err(QpError::DimensionMismatch(format!(
                "A has {} rows but b has {} entries",
                a.nrows(),
                b.len()
            )));
        }
        if h.iter().any(|v| !v.is_finite()) {
            return Err(QpError::NonFinite("H"));
        }
        if c.iter().any(|v| !v.is_finite()) {
            return Err(QpError::NonFinite("c"));
        }
        if a.iter().any(|v| !v.is_finite()) {
            return Err(QpError::NonFinite("A"));
        }
        if b.iter().any(|v| !v.is_finite()) {
            return Err(QpError::NonFinite("b"));
        }
        let asym = (&h - h.transpose()).amax();
        if asym > 1e-10 * h.amax().max(1.0) {
            return Err(QpError::NotSymmetric(asym));
        }
        let a = if a.nrows() == 0 { DMatrix::zeros(0, n) } else { a };
        Ok(QpProblem { h, c, a, b })
    }

    pub fn unconstrained(h: DMatrix<f64>, c: DVector<f64>) -> Result<QpProblem, QpError> {
        let n = c.len();
        QpProblem::new(h, c, DMatrix::zeros(0, n), DVector::zeros(0))
    }

    pub fn n(&self) -> usize {
        self.c.len()
    }

    pub fn m(&self) -> usize {
        self.b.len()
    }

    pub fn cost(&self, x: &DVector<f64>) -> f64 {
        0.5 * x.dot(&(&self.h * x)) + self.c.dot(x)
    }

    /// Lagrange dual function `-1/2 (c + A'l)' H^-1 (c + A'l) - b'l`, or
    /// `None` when `H` cannot be factored.
    pub fn dual_value(&self, multipliers: &DVector<f64>) -> Option<f64> {
        let chol = self.h.clone().cholesky()?;
        let r = &self.c + self.a.transpose() * multipliers;
        Some(-0.5 * r.dot(&chol.solve(&r)) - self.b.dot(multipliers))
    }

    /// Row-major text dump used in run reports.
    pub fn dump(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "n = {}", self.n());
        let _ = writeln!(s, "m = {}", self.m());
        write_matrix(&mut s, "H", &self.h);
        write_vector(&mut s, "c", &self.c);
        write_matrix(&mut s, "A", &self.a);
        write_vector(&mut s, "b", &self.b);
        s
    }
}

pub(crate) fn write_matrix(s: &mut String, name: &str, m: &DMatrix<f64>) {
    let _ = writeln!(s, "{name} = [{}x{}]", m.nrows(), m.ncols());
    for r in 0..m.nrows() {
        let row: Vec<String> = (0..m.ncols()).map(|c| m[(r, c)].to_string()).collect();
        let _ = writeln!(s, "  {}", row.join(" "));
    }
}

pub(crate) fn write_vector(s: &mut String, name: &str, v: &DVector<f64>) {
    let row: Vec<String> = v.iter().map(|x| x.to_string()).collect();
    let _ = writeln!(s, "{name} = [{}]", row.join(" "));
}

/// First-order optimality residuals for `Ax <= b` with multipliers `l`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct KktResiduals {
    /// `||H x + c + A' l||_inf`
    pub stationarity: f64,
    /// `max(0, max(A x - b))`
    pub primal: f64,
    /// `max(0, -min l)`
    pub dual: f64,
    /// `max |l_i (A x - b)_i|`
    pub complementarity: f64,
}

impl KktResiduals {
    pub fn max(&self) -> f64 {
        self.stationarity.max(self.primal).max(self.dual).max(self.complementarity)
    }
}

pub fn kkt_residuals(p: &QpProblem, x: &DVector<f64>, multipliers: &DVector<f64>) -> KktResiduals {
    let grad = &p.h * x + &p.c + p.a.transpose() * multipliers;
    let slack = &p.a * x - &p.b;
    KktResiduals {
        stationarity: grad.amax(),
        primal: slack.iter().fold(0.0f64, |acc, v| acc.max(*v)),
        dual: multipliers.iter().fold(0.0f64, |acc, v| acc.max(-v)),
        complementarity: slack.iter().zip(multipliers.iter()).fold(0.0f64, |acc, (s, l)| acc.max((s * l).abs())),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct QpSolution {
    pub x: DVector<f64>,
    /// Working-set constraints at the optimum, ascending.
    pub active_set: Vec<usize>,
    /// One multiplier per constraint; zero for inactive ones.
    pub multipliers: DVector<f64>,
    pub kkt: KktResiduals,
    pub iterations: usize,
    /// Ridge added to `H` when it was only semidefinite.
    pub ridge: Option<f64>,
}

impl QpSolution {
    pub fn dump(&self) -> String {
        let mut s = String::new();
        write_vector(&mut s, "x", &self.x);
        let active: Vec<String> = self.active_set.iter().map(|i| i.to_string()).collect();
        let _ = writeln!(s, "active_set = [{}]", active.join(" "));
        write_vector(&mut s, "multipliers", &self.multipliers);
        let _ = writeln!(
            s,
            "kkt = stationarity {} primal {} dual {} complementarity {}",
            self.kkt.stationarity, self.kkt.primal, self.kkt.dual, self.kkt.complementarity
        );
        let _ = writeln!(s, "iterations = {}", self.iterations);
        match self.ridge {
            Some(r) => {
                let _ = writeln!(s, "ridge = {r}");
            }
            None => {
                let _ = writeln!(s, "ridge = none");
            }
        }
        s
    }
}
