use crate::calib::{CalibrationMatrix, Calibrator};
use crate::model::{Representation, SensorModel, Wrench, COUNTS_PER_VOLT};
use crate::rng::{stream, Stream};
use crate::AXES;

use super::{nonlinearity, AxisRanges, EvalError};

/// Which index of the table is the loaded axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CrosstalkOrientation {
    /// Row = loaded axis, column = responding axis.
    #[default]
    LoadedRows,
    /// Row = responding axis, column = loaded axis.
    ResponseRows,
}

impl CrosstalkOrientation {
    pub fn parse(s: &str) -> Option<CrosstalkOrientation> {
        match s {
            "loaded-rows" => Some(CrosstalkOrientation::LoadedRows),
            "response-rows" => Some(CrosstalkOrientation::ResponseRows),
            _ => None,
        }
    }

    pub const fn label(self) -> &'static str {
        match self {
            CrosstalkOrientation::LoadedRows => "loaded-rows",
            CrosstalkOrientation::ResponseRows => "response-rows",
        }
    }
}

/// Off-axis response in percent of full scale; diagonal has no entry.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CrosstalkTable {
    /// `loaded[i][j]`: response on axis `j` while axis `i` is loaded.
    pub loaded: [[Option<f64>; 6]; 6],
}

impl CrosstalkTable {
    pub fn oriented(&self, o: CrosstalkOrientation) -> [[Option<f64>; 6]; 6] {
        match o {
            CrosstalkOrientation::LoadedRows => self.loaded,
            CrosstalkOrientation::ResponseRows => std::array::from_fn(|r| std::array::from_fn(|c| self.loaded[c][r])),
        }
    }

    pub fn max(&self) -> f64 {
        self.loaded.iter().flatten().flatten().fold(0.0f64, |a, v| a.max(*v))
    }
}

fn clean_estimate(cal: &dyn Calibrator, model: &SensorModel, w: &Wrench) -> [f64; 6] {
    let mut rng = stream(0, Stream::Noise);
    let frame = model.simulate_frame(0.0, w, &mut rng).frame;
    cal.estimate(&frame.values).to_array()
}

/// Applies a pure full-scale load on each axis through the noise-free model
/// and reports the off-axis outputs, tared against the zero-load output.
pub fn crosstalk(cal: &dyn Calibrator, model: &SensorModel, ranges: &AxisRanges) -> CrosstalkTable {
    let clean = model.noiseless();
    let zero = clean_estimate(cal, &clean, &Wrench::ZERO);
    let mut loaded = [[None; 6]; 6];
    for axis in AXES {
        let i = axis.index();
        let out = clean_estimate(cal, &clean, &Wrench::single(axis, ranges.0[i]));
        for j in 0..6 {
            if j != i {
                loaded[i][j] = Some((out[j] - zero[j]).abs() / ranges.0[j] * 100.0);
            }
        }
    }
    CrosstalkTable { loaded }
}

/// Nonlinearity per axis from a noise-free single-axis sweep over
/// `[-range, range]` with `points` evenly spaced loads.
pub fn nonlinearity_sweep(
    cal: &dyn Calibrator,
    model: &SensorModel,
    ranges: &AxisRanges,
    points: usize,
) -> Result<[f64; 6], EvalError> {
    let clean = model.noiseless();
    let mut out = [0.0; 6];
    for axis in AXES {
        let i = axis.index();
        let r = ranges.0[i];
        let loads: Vec<f64> = (0..points)
            .map(|k| -r + 2.0 * r * k as f64 / (points.max(2) - 1) as f64)
            .collect();
        let pred: Vec<f64> = loads.iter().map(|l| clean_estimate(cal, &clean, &Wrench::single(axis, *l))[i]).collect();
        out[i] = nonlinearity(&pred, &loads, r)?;
    }
    Ok(out)
}

/// Output-side resolution of a linear calibration.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Resolution {
    /// `sqrt(sum_j C_aj^2 sigma_j^2)` for per-channel read noise.
    pub noise_limited: [f64; 6],
    /// One ADC step on every channel through the row norm, `lsb * |C_a|_2`.
    pub quantization_limited: [f64; 6],
}

/// Propagates read noise (given in volts) and one quantization step through
/// the rows of `c`. Both are expressed in `c`'s input representation.
pub fn resolution(noise_std_volts: &[f64; 6], c: &CalibrationMatrix, quantized: bool) -> Resolution {
    let (k, lsb) = match c.representation {
        Representation::Counts => (COUNTS_PER_VOLT, 1.0),
        Representation::Volts => (1.0, 1.0 / COUNTS_PER_VOLT),
    };
    let mut res = Resolution::default();
    for a in 0..6 {
        let row = c.matrix.row(a);
        res.noise_limited[a] = (0..6).map(|j| (row[j] * noise_std_volts[j] * k).powi(2)).sum::<f64>().sqrt();
        res.quantization_limited[a] = if quantized { lsb * row.norm() } else { 0.0 };
    }
    res
}
