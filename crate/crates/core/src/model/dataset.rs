use nalgebra::DMatrix;

use super::{ModelError, Wrench};

/// Units of the six sensor channels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Representation {
    Volts,
    Counts,
}

impl Representation {
    pub const fn name(self) -> &'static str {
        match self {
            Representation::Volts => "volts",
            Representation::Counts => "counts",
        }
    }

    pub fn parse(s: &str) -> Option<Representation> {
        match s.trim() {
            "volts" => Some(Representation::Volts),
            "counts" => Some(Representation::Counts),
            _ => None,
        }
    }
}

/// Six photocoupler readings at one instant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SensorFrame {
    pub t: f64,
    pub values: [f64; 6],
    pub representation: Representation,
}

impl SensorFrame {
    pub fn new(t: f64, values: [f64; 6], representation: Representation) -> SensorFrame {
        SensorFrame { t, values, representation }
    }

    /// Checks the rail invariants of the representation.
    pub fn validate(&self) -> Result<(), ModelError> {
        if !self.t.is_finite() || self.values.iter().any(|v| !v.is_finite()) {
            return Err(ModelError::NonFinite(format!("sensor frame at t = {}", self.t)));
        }
        let (low, high) = match self.representation {
            Representation::Volts => (0.0, super::ADC_FULL_SCALE_VOLTS),
            Representation::Counts => (0.0, super::ADC_MAX_COUNT as f64),
        };
        if let Some(v) = self.values.iter().find(|v| **v < low || **v > high) {
            return Err(ModelError::InvalidDataset(format!(
                "{} reading {v} outside [{low}, {high}] at t = {}",
                self.representation.name(),
                self.t
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sample {
    pub frame: SensorFrame,
    pub wrench: Wrench,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct DatasetMetadata {
    pub seed: Option<u64>,
    pub trajectory: String,
    pub noise_std: [f64; 6],
    pub adc: bool,
    /// Number of samples where at least one channel left its linear band.
    pub saturated_samples: usize,
}

/// Paired sensor frames and reference wrenches, ordered by time.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    samples: Vec<Sample>,
    pub sample_rate: f64,
    pub metadata: DatasetMetadata,
}

impl Dataset {
    pub fn new(
        samples: Vec<Sample>,
        sample_rate: f64,
        metadata: DatasetMetadata,
    ) -> Result<Dataset, ModelError> {
        if !(sample_rate.is_finite() && sample_rate > 0.0) {
            return Err(ModelError::InvalidDataset(format!("sample rate {sample_rate}")));
        }
        if let Some(first) = samples.first() {
            let repr = first.frame.representation;
            for (k, s) in samples.iter().enumerate() {
                if s.frame.representation != repr {
                    return Err(ModelError::InvalidDataset(format!(
                        "sample {k} mixes representations"
                    )));
                }
                if !s.wrench.is_finite() {
                    return Err(ModelError::NonFinite(format!("wrench of sample {k}")));
                }
                if k > 0 && !(s.frame.t > samples[k - 1].frame.t) {
                    return Err(ModelError::InvalidDataset(format!(
                        "timestamps not strictly increasing at sample {k}"
                    )));
                }
            }
        }
        Ok(Dataset { samples, sample_rate, metadata })
    }

    /// Builds a dataset from bare arrays with timestamps `k / rate`.
    pub fn from_arrays(
        frames: &[[f64; 6]],
        wrenches: &[Wrench],
        representation: Representation,
        sample_rate: f64,
    ) -> Result<Dataset, ModelError> {
        if frames.len() != wrenches.len() {
            return Err(ModelError::InvalidDataset(format!(
                "{} frames but {} wrenches",
                frames.len(),
                wrenches.len()
            )));
        }
        let samples = frames
            .iter()
            .zip(wrenches)
            .enumerate()
            .map(|(k, (values, wrench))| Sample {
                frame: SensorFrame::new(k as f64 / sample_rate, *values, representation),
                wrench: *wrench,
            })
            .collect();
        Dataset::new(samples, sample_rate, DatasetMetadata::default())
    }

    pub fn samples(&self) -> &[Sample] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn representation(&self) -> Option<Representation> {
        self.samples.first().map(|s| s.frame.representation)
    }

    pub fn frames(&self) -> impl Iterator<Item = &SensorFrame> {
        self.samples.iter().map(|s| &s.frame)
    }

    pub fn wrenches(&self) -> Vec<Wrench> {
        self.samples.iter().map(|s| s.wrench).collect()
    }

    /// N x 6 regressor matrix, one row per frame.
    pub fn sensor_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.len(), 6, |r, c| self.samples[r].frame.values[c])
    }

    /// N x 6 reference wrench matrix, one row per sample.
    pub fn wrench_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.len(), 6, |r, c| self.samples[r].wrench.to_array()[c])
    }

    /// Replaces each channel's series by `f(channel, series)`. The closure
    /// must return a series of the same length.
    pub fn map_channels(&self, mut f: impl FnMut(usize, &[f64]) -> Vec<f64>) -> Dataset {
        let mut samples = self.samples.clone();
        for ch in 0..6 {
            let series: Vec<f64> = self.samples.iter().map(|s| s.frame.values[ch]).collect();
            let out = f(ch, &series);
            assert_eq!(out.len(), series.len(), "channel map changed the series length");
            for (s, v) in samples.iter_mut().zip(out) {
                s.frame.values[ch] = v;
            }
        }
        Dataset { samples, sample_rate: self.sample_rate, metadata: self.metadata.clone() }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn frame(t: f64) -> SensorFrame {
        SensorFrame::new(t, [1.0; 6], Representation::Volts)
    }

    #[test]
    fn rejects_non_increasing_time() {
        let s = |t| Sample { frame: frame(t), wrench: Wrench::ZERO };
        assert!(Dataset::new(vec![s(0.0), s(0.0)], 1.0, Default::default()).is_err());
        assert!(Dataset::new(vec![s(0.0), s(1.0)], 1.0, Default::default()).is_ok());
    }

    #[test]
    fn rejects_mixed_representations() {
        let a = Sample { frame: frame(0.0), wrench: Wrench::ZERO };
        let mut b = a;
        b.frame.t = 1.0;
        b.frame.representation = Representation::Counts;
        assert!(Dataset::new(vec![a, b], 1.0, Default::default()).is_err());
    }

    #[test]
    fn frame_rails() {
        assert!(frame(0.0).validate().is_ok());
        let mut f = frame(0.0);
        f.values[2] = 3.4;
        assert!(f.validate().is_err());
        f.representation = Representation::Counts;
        assert!(f.validate().is_ok());
        f.values[2] = 70000.0;
        assert!(f.validate().is_err());
    }
}
