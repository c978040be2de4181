//! Forward model of the optical six-axis sensor.
//!
//! A wrench deflects the elastic structure; six reflective screens move
//! relative to their photocouplers ([`ComplianceMap`]); each photocoupler turns
//! distance into a voltage ([`PhotocouplerCurve`]); an optional 16-bit ADC
//! quantizes the voltage ([`quantize`]). [`SensorModel`] composes the chain and
//! adds Gaussian read noise, producing ground-truth [`Dataset`]s.

mod compliance;
mod dataset;
mod photocoupler;
mod sensor;
mod trajectory;
mod wrench;

pub use compliance::{numerical_rank, travel_scale, ComplianceMap, DEFAULT_FULL_SCALE_TRAVEL_MM, FEM_DISPLACEMENT_RATIOS};
pub(crate) use compliance::fem_ratios;
pub(crate) use sensor::simulate_with_stream;
pub use dataset::{Dataset, DatasetMetadata, Representation, Sample, SensorFrame};
pub use photocoupler::{
    quantize, PhotocouplerCurve, ADC_FULL_SCALE_VOLTS, ADC_MAX_COUNT, COUNTS_PER_VOLT,
};
pub use sensor::{simulate_dataset, GroundTruth, SensorModel, SimulatedFrame};
pub use trajectory::{generate_trajectory, Trajectory, TrajectoryKind};
pub use wrench::Wrench;

/// Default full-scale magnitudes per axis (N for forces, N*m for moments).
pub const DEFAULT_FULL_SCALE: [f64; 6] = [1050.0, 1200.0, 1850.0, 25.0, 25.0, 36.0];

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ModelError {
    #[error("compliance ratios are rank deficient (numerical rank {rank} < 6)")]
    RankDeficient { rank: usize },
    #[error("non-finite value in {0}")]
    NonFinite(String),
    #[error("invalid photocoupler curve: {0}")]
    InvalidCurve(String),
    #[error("invalid trajectory: {0}")]
    InvalidTrajectory(String),
    #[error("unknown trajectory kind `{0}`")]
    UnknownKind(String),
    #[error("invalid dataset: {0}")]
    InvalidDataset(String),
}
