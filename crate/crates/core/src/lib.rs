//! Calibration and simulation toolkit for six-axis force/torque sensors.
//!
//! The crate is organised around five modules:
//!
//! * [`model`]: forward simulation of an optical F/T sensor (wrench to screen
//!   displacement to photocoupler voltage to ADC counts).
//! * [`qp`]: a dense primal active-set quadratic-programming solver and the
//!   builder that turns calibration time series into per-axis problems.
//! * [`calib`]: calibration engines (pseudo-inverse, structurally constrained
//!   QP, ridge polynomial, small feedforward network) and sign-structure checks.
//! * [`eval`]: full-scale error, RMSE, nonlinearity, crosstalk and resolution
//!   metrics plus the multi-method comparison harness.
//! * [`pipeline`]: configuration, CSV ingestion/emission, Kalman pre-filtering,
//!   run manifests and the command implementations behind the `ftcal` binary.

pub mod axis;
pub mod calib;
pub mod eval;
pub mod model;
pub mod pipeline;
pub mod qp;
pub mod rng;

pub use axis::{Axis, AXES};
pub use model::{Dataset, Representation, SensorFrame, Wrench};
