use nalgebra::{Matrix6, Vector6};
use rand::Rng;
use rand_distr::StandardNormal;

use super::{
    quantize, ComplianceMap, Dataset, DatasetMetadata, ModelError, PhotocouplerCurve,
    Representation, Sample, SensorFrame, Trajectory, Wrench, ADC_FULL_SCALE_VOLTS,
    COUNTS_PER_VOLT,
};
use crate::rng::{stream, Stream};

/// Compliance plus one photocoupler per screen, with optional quantization.
#[derive(Debug, Clone, PartialEq)]
pub struct SensorModel {
    pub compliance: ComplianceMap,
    pub curves: [PhotocouplerCurve; 6],
    pub adc: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimulatedFrame {
    pub frame: SensorFrame,
    /// Channels whose screen left the linear band.
    pub saturated: [bool; 6],
}

impl SimulatedFrame {
    pub fn any_saturated(&self) -> bool {
        self.saturated.iter().any(|s| *s)
    }
}

/// Exact affine inverse of a linear, unsaturated, noise-free model:
/// `w = matrix * s + offset`.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruth {
    pub matrix: Matrix6<f64>,
    pub offset: Vector6<f64>,
    pub representation: Representation,
}

impl SensorModel {
    pub fn new(compliance: ComplianceMap, curve: PhotocouplerCurve) -> SensorModel {
        SensorModel { compliance, curves: [curve; 6], adc: false }
    }

    /// FEM compliance with default curves and no ADC.
    pub fn fem_default() -> SensorModel {
        SensorModel::new(ComplianceMap::fem_default(), PhotocouplerCurve::default())
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        self.curves.iter().try_for_each(|c| c.validate())
    }

    pub fn representation(&self) -> Representation {
        if self.adc {
            Representation::Counts
        } else {
            Representation::Volts
        }
    }

    pub fn noiseless(&self) -> SensorModel {
        SensorModel { curves: self.curves.map(|c| c.noiseless()), ..self.clone() }
    }

    pub fn noise_std(&self) -> [f64; 6] {
        self.curves.map(|c| c.noise_std)
    }

    /// One frame for wrench `w` at time `t`. Exactly one standard-normal draw
    /// is taken per channel regardless of the noise level, so noisy and
    /// noise-free runs with the same stream stay aligned.
    pub fn simulate_frame<R: Rng + ?Sized>(&self, t: f64, w: &Wrench, rng: &mut R) -> SimulatedFrame {
        let d = self.compliance.displacements(w);
        let mut values = [0.0; 6];
        let mut saturated = [false; 6];
        for (j, curve) in self.curves.iter().enumerate() {
            let (v, sat) = curve.voltage(curve.operating_point + d[j]);
            let z: f64 = rng.sample(StandardNormal);
            let v = (v + curve.noise_std * z).clamp(0.0, ADC_FULL_SCALE_VOLTS);
            values[j] = if self.adc { quantize(v) as f64 } else { v };
            saturated[j] = sat;
        }
        SimulatedFrame { frame: SensorFrame::new(t, values, self.representation()), saturated }
    }

    /// The affine inverse of the linearised model, in the model's
    /// representation. Ignores noise, quantization and the cubic term.
    pub fn ground_truth(&self) -> GroundTruth {
        let k = if self.adc { COUNTS_PER_VOLT } else { 1.0 };
        let mut response = self.compliance.matrix();
        for (j, curve) in self.curves.iter().enumerate() {
            response.row_mut(j).scale_mut(k * curve.gain);
        }
        let matrix = response.try_inverse().expect("full-rank compliance with nonzero gains");
        let bias = Vector6::from_fn(|j, _| k * self.curves[j].bias);
        GroundTruth { offset: -(matrix * bias), matrix, representation: self.representation() }
    }
}

/// Applies [`SensorModel::simulate_frame`] along a trajectory, drawing noise
/// from the seed's noise stream.
pub fn simulate_dataset(model: &SensorModel, trajectory: &Trajectory, seed: u64) -> Dataset {
    simulate_with_stream(model, trajectory, seed, Stream::Noise)
}

pub(crate) fn simulate_with_stream(
    model: &SensorModel,
    trajectory: &Trajectory,
    seed: u64,
    which: Stream,
) -> Dataset {
    let mut rng = stream(seed, which);
    let mut saturated_samples = 0;
    let samples = trajectory
        .times
        .iter()
        .zip(&trajectory.wrenches)
        .map(|(t, w)| {
            let sim = model.simulate_frame(*t, w, &mut rng);
            if sim.any_saturated() {
                saturated_samples += 1;
            }
            Sample { frame: sim.frame, wrench: *w }
        })
        .collect();
    let metadata = DatasetMetadata {
        seed: Some(seed),
        trajectory: trajectory.kind.label(),
        noise_std: model.noise_std(),
        adc: model.adc,
        saturated_samples,
    };
    Dataset::new(samples, trajectory.rate, metadata).expect("trajectory times are increasing")
}
