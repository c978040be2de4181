use std::fmt::Write as _;

use super::{
    crosstalk, full_scale_error, nonlinearity_sweep, rmse, AxisRanges, CrosstalkOrientation, CrosstalkTable, EvalError,
    FseStats, Resolution,
};
use crate::calib::Calibrator;
use crate::model::{SensorModel, Wrench};
use crate::{Dataset, AXES};

/// Metrics of one calibrator on one test set.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsReport {
    pub method: String,
    pub samples: usize,
    pub fse: [FseStats; 6],
    pub rmse: [f64; 6],
    pub nonlinearity: Option<[f64; 6]>,
    pub crosstalk: Option<CrosstalkTable>,
    pub resolution: Option<Resolution>,
    /// Free-form `key = value` lines copied into the report header.
    pub metadata: Vec<(String, String)>,
}

/// Error metrics of `cal` on `test`; with a model also crosstalk and the
/// nonlinearity sweep (`sweep_points` loads per axis).
pub fn evaluate(
    cal: &dyn Calibrator,
    method: &str,
    test: &Dataset,
    ranges: &AxisRanges,
    model: Option<&SensorModel>,
    sweep_points: usize,
) -> Result<MetricsReport, EvalError> {
    let pred: Vec<Wrench> = test
        .frames()
        .map(|f| cal.apply(f))
        .collect::<Result<_, _>>()
        .map_err(|source| EvalError::Method { method: method.to_string(), source })?;
    let reference = test.wrenches();
    let fse = full_scale_error(&pred, &reference, ranges)?;
    let rmse = rmse(&pred, &reference)?;
    let (nonlinearity, crosstalk) = match model {
        Some(m) => (Some(nonlinearity_sweep(cal, m, ranges, sweep_points)?), Some(crosstalk(cal, m, ranges))),
        None => (None, None),
    };
    let mut metadata = vec![
        ("trajectory".to_string(), test.metadata.trajectory.clone()),
        ("representation".to_string(), test.representation().map_or("none", |r| r.name()).to_string()),
    ];
    if let Some(seed) = test.metadata.seed {
        metadata.push(("seed".to_string(), seed.to_string()));
    }
    Ok(MetricsReport {
        method: method.to_string(),
        samples: test.len(),
        fse,
        rmse,
        nonlinearity,
        crosstalk,
        resolution: None,
        metadata,
    })
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(|| "NA".to_string(), |x| x.to_string())
}

impl MetricsReport {
    /// Long-format CSV: `section,row,column,value`.
    pub fn to_csv(&self, orientation: CrosstalkOrientation) -> String {
        let mut s = String::from("section,row,column,value\n");
        for (k, v) in &self.metadata {
            let _ = writeln!(s, "meta,{k},,{v}");
        }
        let _ = writeln!(s, "meta,method,,{}", self.method);
        let _ = writeln!(s, "meta,samples,,{}", self.samples);
        let _ = writeln!(s, "meta,std,,population");
        for a in AXES {
            let i = a.index();
            let _ = writeln!(s, "fse_mean,{a},,{}", self.fse[i].mean);
            let _ = writeln!(s, "fse_std,{a},,{}", self.fse[i].std);
            let _ = writeln!(s, "fse_max,{a},,{}", self.fse[i].max);
            let _ = writeln!(s, "rmse,{a},,{}", self.rmse[i]);
            if let Some(nl) = &self.nonlinearity {
                let _ = writeln!(s, "nonlinearity,{a},,{}", nl[i]);
            }
            if let Some(r) = &self.resolution {
                let _ = writeln!(s, "resolution_noise,{a},,{}", r.noise_limited[i]);
                let _ = writeln!(s, "resolution_lsb,{a},,{}", r.quantization_limited[i]);
            }
        }
        if let Some(t) = &self.crosstalk {
            let _ = writeln!(s, "meta,crosstalk_orientation,,{}", orientation.label());
            let grid = t.oriented(orientation);
            for (r, row) in grid.iter().enumerate() {
                for (c, v) in row.iter().enumerate() {
                    let _ = writeln!(s, "crosstalk,{},{},{}", AXES[r], AXES[c], opt(*v));
                }
            }
        }
        s
    }

    /// Fixed-width tables of percentage error, RMSE and crosstalk.
    pub fn to_text(&self, orientation: CrosstalkOrientation) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "method: {}", self.method);
        for (k, v) in &self.metadata {
            let _ = writeln!(s, "{k}: {v}");
        }
        let _ = writeln!(s, "samples: {} (population std)", self.samples);
        let _ = writeln!(s);
        let _ = writeln!(s, "axis   fse_mean%  fse_std%  fse_max%        rmse  nonlin%");
        for a in AXES {
            let i = a.index();
            let nl = self.nonlinearity.map_or_else(|| "NA".to_string(), |n| format!("{:.4}", n[i]));
            let _ = writeln!(
                s,
                "{:<5} {:>10.4} {:>9.4} {:>9.4} {:>11.4} {:>8}",
                a.name(),
                self.fse[i].mean,
                self.fse[i].std,
                self.fse[i].max,
                self.rmse[i],
                nl
            );
        }
        if let Some(r) = &self.resolution {
            let _ = writeln!(s);
            let _ = writeln!(s, "axis   noise_res    lsb_res");
            for a in AXES {
                let i = a.index();
                let _ = writeln!(s, "{:<5} {:>10.5} {:>10.5}", a.name(), r.noise_limited[i], r.quantization_limited[i]);
            }
        }
        if let Some(t) = &self.crosstalk {
            let _ = writeln!(s);
            let _ = writeln!(s, "crosstalk % full scale ({})", orientation.label());
            let _ = write!(s, "{:<5}", "");
            for a in AXES {
                let _ = write!(s, " {:>8}", a.name());
            }
            let _ = writeln!(s);
            for (r, row) in t.oriented(orientation).iter().enumerate() {
                let _ = write!(s, "{:<5}", AXES[r].name());
                for v in row {
                    match v {
                        Some(x) => {
                            let _ = write!(s, " {:>8.4}", x);
                        }
                        None => {
                            let _ = write!(s, " {:>8}", "N/A");
                        }
                    }
                }
                let _ = writeln!(s);
            }
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::calib::CalibrationMatrix;
    use crate::model::{generate_trajectory, simulate_dataset, TrajectoryKind, DEFAULT_FULL_SCALE};

    #[test]
    fn ground_truth_on_clean_data_is_error_free() {
        let model = SensorModel::fem_default().noiseless();
        let traj = generate_trajectory(&TrajectoryKind::Mixed, 1.0, 200.0, &Wrench::from_array(DEFAULT_FULL_SCALE.map(|v| v * 0.5))).unwrap();
        let data = simulate_dataset(&model, &traj, 1);
        let truth = CalibrationMatrix::from_ground_truth(&model.ground_truth());
        let r = evaluate(&truth, "truth", &data, &AxisRanges::default(), Some(&model), 21).unwrap();
        for a in 0..6 {
            assert!(r.fse[a].max < 1e-9);
        }
        let csv = r.to_csv(CrosstalkOrientation::LoadedRows);
        assert!(csv.starts_with("section,row,column,value\n"));
        assert!(csv.contains("crosstalk,fx,fx,NA"));
        assert!(r.to_text(CrosstalkOrientation::ResponseRows).contains("N/A"));
    }
}
