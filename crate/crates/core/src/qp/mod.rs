//! Dense inequality-constrained quadratic programming.
//!
//! Problems have the form
//!
//! ```text
//!     minimize    1/2 x' H x + c' x
//!     subject to  A x <= b
//! ```
//!
//! with `H` symmetric positive definite. [`solve`] runs a primal active-set
//! method whose equality-constrained subproblems are solved through a
//! Cholesky factor of `H` and the Schur complement `A_W H^-1 A_W'`.
//! [`assemble_axis_problem`] builds the least-squares cost of one calibration
//! row from a dataset.

mod assemble;
mod problem;
mod solver;

pub use assemble::{assemble_axis_problem, assemble_from_regressors, AssembledProblem};
pub use problem::{kkt_residuals, KktResiduals, QpProblem, QpSolution};
pub use solver::solve;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum QpError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("non-finite entry in {0}")]
    NonFinite(&'static str),
    #[error("cost matrix is not symmetric (max asymmetry {0:e})")]
    NotSymmetric(f64),
    #[error("cost matrix is not positive definite")]
    NotPositiveDefinite,
    #[error("no point satisfies A x <= b (phase-1 residual {0:e})")]
    Infeasible(f64),
    #[error("iteration limit {0} reached")]
    IterationLimit(usize),
    #[error("dataset is empty")]
    EmptyDataset,
    #[error("dataset frames mix sensor representations")]
    MixedRepresentation,
}
