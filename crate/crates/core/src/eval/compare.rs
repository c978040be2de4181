use std::fmt::Write as _;

use super::{evaluate, resolution, AxisRanges, CrosstalkOrientation, EvalError, MetricsReport};
use crate::calib::{
    calibrate_pseudo_inverse, calibrate_qp, calibrate_regularized, train_mlp, CalibrationMatrix, Calibrator,
    ConstraintSet, MlpCalibrator, MlpSettings, PolyCalibrator,
};
use crate::model::{Representation, SensorModel, Wrench};
use crate::{Dataset, AXES};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MethodKind {
    PseudoInverse,
    ConstrainedQp,
    Ridge,
    Mlp,
}

impl MethodKind {
    pub const ALL: [MethodKind; 4] = [MethodKind::ConstrainedQp, MethodKind::PseudoInverse, MethodKind::Ridge, MethodKind::Mlp];

    pub const fn label(self) -> &'static str {
        match self {
            MethodKind::PseudoInverse => "pinv",
            MethodKind::ConstrainedQp => "qp",
            MethodKind::Ridge => "ridge",
            MethodKind::Mlp => "mlp",
        }
    }

    pub fn parse(s: &str) -> Option<MethodKind> {
        match s.trim() {
            "pinv" => Some(MethodKind::PseudoInverse),
            "qp" => Some(MethodKind::ConstrainedQp),
            "ridge" => Some(MethodKind::Ridge),
            "mlp" => Some(MethodKind::Mlp),
            _ => None,
        }
    }
}

/// A fitted model of any method.
#[derive(Debug, Clone, PartialEq)]
pub enum FittedCalibrator {
    Linear(CalibrationMatrix),
    Poly(PolyCalibrator),
    Mlp(MlpCalibrator),
}

impl Calibrator for FittedCalibrator {
    fn input_representation(&self) -> Representation {
        match self {
            FittedCalibrator::Linear(c) => c.input_representation(),
            FittedCalibrator::Poly(c) => c.input_representation(),
            FittedCalibrator::Mlp(c) => c.input_representation(),
        }
    }

    fn estimate(&self, values: &[f64; 6]) -> Wrench {
        match self {
            FittedCalibrator::Linear(c) => c.estimate(values),
            FittedCalibrator::Poly(c) => c.estimate(values),
            FittedCalibrator::Mlp(c) => c.estimate(values),
        }
    }
}

/// Everything the methods and metrics need besides the data.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalContext {
    pub ranges: AxisRanges,
    /// Enables crosstalk, nonlinearity sweeps and resolution.
    pub model: Option<SensorModel>,
    pub constraints: [ConstraintSet; 6],
    pub slack: Option<f64>,
    pub ridge_lambda: f64,
    pub ridge_degree: usize,
    pub mlp: MlpSettings,
    pub sweep_points: usize,
    pub orientation: CrosstalkOrientation,
}

impl Default for EvalContext {
    fn default() -> Self {
        EvalContext {
            ranges: AxisRanges::default(),
            model: None,
            constraints: ConstraintSet::empty_all(),
            slack: None,
            ridge_lambda: 0.0,
            ridge_degree: 2,
            mlp: MlpSettings::default(),
            sweep_points: 21,
            orientation: CrosstalkOrientation::default(),
        }
    }
}

impl EvalContext {
    pub fn fit(&self, kind: MethodKind, train: &Dataset) -> Result<FittedCalibrator, EvalError> {
        let tag = |source| EvalError::Method { method: kind.label().to_string(), source };
        Ok(match kind {
            MethodKind::PseudoInverse => FittedCalibrator::Linear(calibrate_pseudo_inverse(train).map_err(tag)?),
            MethodKind::ConstrainedQp => {
                let mut c = calibrate_qp(train, &self.constraints).map_err(tag)?;
                c.diagnostics.slack = self.slack;
                FittedCalibrator::Linear(c)
            }
            MethodKind::Ridge => {
                FittedCalibrator::Poly(calibrate_regularized(train, self.ridge_lambda, self.ridge_degree).map_err(tag)?)
            }
            MethodKind::Mlp => FittedCalibrator::Mlp(train_mlp(train, self.mlp).map_err(tag)?),
        })
    }

    pub fn evaluate(&self, fitted: &FittedCalibrator, label: &str, test: &Dataset) -> Result<MetricsReport, EvalError> {
        let mut report = evaluate(fitted, label, test, &self.ranges, self.model.as_ref(), self.sweep_points)?;
        if let (FittedCalibrator::Linear(c), Some(m)) = (fitted, &self.model) {
            report.resolution = Some(resolution(&m.noise_std(), c, m.adc));
        }
        Ok(report)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MethodResult {
    pub kind: MethodKind,
    pub fitted: FittedCalibrator,
    pub metrics: MetricsReport,
}

/// One metrics row per method plus the pseudo-inverse to QP error ratio.
#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonReport {
    pub results: Vec<MethodResult>,
    /// Per-axis mean FSE of the pseudo-inverse divided by that of QP, when
    /// both were run.
    pub improvement_ratio: Option<[f64; 6]>,
}

fn ratio(num: f64, den: f64) -> f64 {
    if den == 0.0 {
        if num == 0.0 {
            1.0
        } else {
            f64::INFINITY
        }
    } else {
        num / den
    }
}

/// Fits every method on `train` and evaluates it on `test`.
pub fn compare_methods(
    train: &Dataset,
    test: &Dataset,
    methods: &[MethodKind],
    ctx: &EvalContext,
) -> Result<ComparisonReport, EvalError> {
    let mut results = Vec::with_capacity(methods.len());
    for &kind in methods {
        let fitted = ctx.fit(kind, train)?;
        let metrics = ctx.evaluate(&fitted, kind.label(), test)?;
        results.push(MethodResult { kind, fitted, metrics });
    }
    let find = |k: MethodKind| results.iter().find(|r| r.kind == k);
    let improvement_ratio = match (find(MethodKind::PseudoInverse), find(MethodKind::ConstrainedQp)) {
        (Some(p), Some(q)) => Some(std::array::from_fn(|a| ratio(p.metrics.fse[a].mean, q.metrics.fse[a].mean))),
        _ => None,
    };
    Ok(ComparisonReport { results, improvement_ratio })
}

impl ComparisonReport {
    pub fn get(&self, kind: MethodKind) -> Option<&MethodResult> {
        self.results.iter().find(|r| r.kind == kind)
    }

    /// Grid with one row per method: mean FSE per axis, then nonlinearity per
    /// axis when available.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("method,metric");
        for a in AXES {
            let _ = write!(s, ",{a}");
        }
        s.push('\n');
        for r in &self.results {
            let m = &r.metrics;
            let _ = write!(s, "{},fse_mean", r.kind.label());
            for a in 0..6 {
                let _ = write!(s, ",{}", m.fse[a].mean);
            }
            s.push('\n');
            let _ = write!(s, "{},fse_max", r.kind.label());
            for a in 0..6 {
                let _ = write!(s, ",{}", m.fse[a].max);
            }
            s.push('\n');
            if let Some(nl) = &m.nonlinearity {
                let _ = write!(s, "{},nonlinearity", r.kind.label());
                for v in nl {
                    let _ = write!(s, ",{v}");
                }
                s.push('\n');
            }
        }
        if let Some(ratio) = &self.improvement_ratio {
            s.push_str("pinv/qp,fse_mean_ratio");
            for v in ratio {
                let _ = write!(s, ",{v}");
            }
            s.push('\n');
        }
        s
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = write!(s, "{:<8} {:<13}", "method", "metric");
        for a in AXES {
            let _ = write!(s, " {:>9}", a.name());
        }
        s.push('\n');
        let row = |s: &mut String, label: &str, metric: &str, vals: &[f64; 6]| {
            let _ = write!(s, "{label:<8} {metric:<13}");
            for v in vals {
                let _ = write!(s, " {v:>9.4}");
            }
            s.push('\n');
        };
        for r in &self.results {
            let means: [f64; 6] = std::array::from_fn(|a| r.metrics.fse[a].mean);
            row(&mut s, r.kind.label(), "fse_mean%", &means);
            if let Some(nl) = &r.metrics.nonlinearity {
                row(&mut s, r.kind.label(), "nonlin%", nl);
            }
        }
        if let Some(ratio) = &self.improvement_ratio {
            row(&mut s, "pinv/qp", "ratio", ratio);
        }
        s
    }
}
