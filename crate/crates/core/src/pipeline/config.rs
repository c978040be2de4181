use std::fmt;
use std::path::{Path, PathBuf};

use nalgebra::Matrix6;
use serde::{Deserialize, Serialize};

use super::{KalmanParams, PipelineError};
use crate::calib::{default_constraints, MlpSettings, SignPattern, StructuralConstraints};
use crate::eval::{AxisRanges, CrosstalkOrientation, EvalContext, MethodKind};
use crate::model::{
    fem_ratios, generate_trajectory, simulate_with_stream, simulate_dataset, travel_scale, ComplianceMap,
    PhotocouplerCurve, SensorModel, TrajectoryKind, DEFAULT_FULL_SCALE,
};
use crate::rng::Stream;
use crate::{Axis, Dataset, Wrench};

/// One problem found while reading or validating a configuration.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigIssue {
    /// Dotted key path, empty for syntax errors.
    pub key: String,
    /// 1-based source position when known.
    pub position: Option<(usize, usize)>,
    pub message: String,
}

impl ConfigIssue {
    fn at(key: &str, message: impl Into<String>) -> ConfigIssue {
        ConfigIssue { key: key.to_string(), position: None, message: message.into() }
    }
}

impl fmt::Display for ConfigIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some((line, column)) = self.position {
            write!(f, "line {line}, column {column}: ")?;
        }
        if !self.key.is_empty() {
            write!(f, "{}: ", self.key)?;
        }
        f.write_str(&self.message)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CurveSection {
    pub operating_point: f64,
    pub gain: f64,
    pub bias: f64,
    pub linear_low: f64,
    pub linear_high: f64,
    pub noise_std: f64,
    pub cubic: f64,
}

impl Default for CurveSection {
    fn default() -> Self {
        let c = PhotocouplerCurve::default();
        CurveSection {
            operating_point: c.operating_point,
            gain: c.gain,
            bias: c.bias,
            linear_low: c.linear_range.0,
            linear_high: c.linear_range.1,
            noise_std: c.noise_std,
            cubic: c.cubic,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelSection {
    /// `"fem"` for the built-in ratio table, otherwise a path to a 6x6 CSV
    /// of ratios (rows: axes, columns: sensors), relative to the config file.
    pub compliance: String,
    /// Screen travel of the most responsive sensor at full-scale load.
    pub travel_mm: f64,
    pub adc: bool,
    pub curve: CurveSection,
    /// Per-sensor noise override of `curve.noise_std`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub noise_std: Option<Vec<f64>>,
}

impl Default for ModelSection {
    fn default() -> Self {
        ModelSection {
            compliance: "fem".into(),
            travel_mm: crate::model::DEFAULT_FULL_SCALE_TRAVEL_MM,
            adc: false,
            curve: CurveSection::default(),
            noise_std: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrajectorySection {
    pub kind: String,
    pub duration: f64,
    pub rate: f64,
    /// Amplitude as a fraction of each axis range. Ignored when
    /// `amplitudes` is set.
    pub amplitude_fraction: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub amplitudes: Option<Vec<f64>>,
    pub seed: u64,
}

impl Default for TrajectorySection {
    fn default() -> Self {
        TrajectorySection {
            kind: "mixed".into(),
            duration: 2.0,
            rate: 1000.0,
            amplitude_fraction: 0.5,
            amplitudes: None,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CalibrationSection {
    pub methods: Vec<String>,
    pub slack: f64,
    pub ridge_lambda: f64,
    pub ridge_degree: usize,
    pub mlp_epochs: usize,
    pub mlp_learning_rate: f64,
    /// Kalman-filter every channel before fitting.
    pub kalman: bool,
    pub kalman_q: f64,
    pub kalman_r: f64,
}

impl Default for CalibrationSection {
    fn default() -> Self {
        let mlp = MlpSettings::default();
        let k = KalmanParams::default();
        CalibrationSection {
            methods: vec!["pinv".into(), "qp".into()],
            slack: 20.0,
            ridge_lambda: 1e-6,
            ridge_degree: 2,
            mlp_epochs: mlp.epochs,
            mlp_learning_rate: mlp.learning_rate,
            kalman: false,
            kalman_q: k.q,
            kalman_r: k.r,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EvaluationSection {
    pub ranges: Vec<f64>,
    pub crosstalk_orientation: String,
    pub theta: f64,
    pub sweep_points: usize,
    pub test_kind: String,
    pub test_duration: f64,
    pub test_noise: bool,
}

impl Default for EvaluationSection {
    fn default() -> Self {
        EvaluationSection {
            ranges: DEFAULT_FULL_SCALE.to_vec(),
            crosstalk_orientation: CrosstalkOrientation::default().label().into(),
            theta: crate::calib::DEFAULT_THETA,
            sweep_points: 21,
            test_kind: "mixed".into(),
            test_duration: 0.5,
            test_noise: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DemoSection {
    /// Axes excited during training; the rest stay at zero.
    pub axes: Vec<String>,
    /// Number of consecutive seeds starting at `trajectory.seed`.
    pub seeds: usize,
    pub train_duration: f64,
    pub test_duration: f64,
    /// Minimum number of axes on which the constrained fit must not lose.
    pub required_wins: usize,
}

impl Default for DemoSection {
    fn default() -> Self {
        DemoSection {
            axes: ["fx", "fy", "mx", "my", "mz"].map(String::from).to_vec(),
            seeds: 10,
            train_duration: 2.0,
            test_duration: 0.5,
            required_wins: 4,
        }
    }
}

/// Raw experiment configuration as read from TOML.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub model: ModelSection,
    pub trajectory: TrajectorySection,
    pub calibration: CalibrationSection,
    pub evaluation: EvaluationSection,
    pub demo: DemoSection,
}

fn line_column(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let column = before.rsplit('\n').next().map_or(0, |l| l.chars().count()) + 1;
    (line, column)
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<ExperimentConfig, PipelineError> {
        toml::from_str(text).map_err(|e| {
            let position = e.span().map(|s| line_column(text, s.start));
            PipelineError::Config(vec![ConfigIssue { key: String::new(), position, message: e.message().to_string() }])
        })
    }

    pub fn load(path: &Path) -> Result<ExperimentConfig, PipelineError> {
        let text = std::fs::read_to_string(path).map_err(|e| PipelineError::io(path, e))?;
        ExperimentConfig::from_toml(&text)
    }

    /// Canonical TOML of every field, defaults included.
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration is serializable")
    }

    /// Checks every field and resolves the configuration. All problems are
    /// reported together. Relative paths resolve against `base`.
    pub fn validate(&self, base: &Path) -> Result<Experiment, PipelineError> {
        let mut issues = Vec::new();
        let mut check = |ok: bool, key: &str, msg: String| {
            if !ok {
                issues.push(ConfigIssue::at(key, msg));
            }
        };
        let positive = |v: f64| v.is_finite() && v > 0.0;

        let m = &self.model;
        check(positive(m.travel_mm), "model.travel_mm", format!("must be positive, got {}", m.travel_mm));
        let c = &m.curve;
        let curve = PhotocouplerCurve {
            operating_point: c.operating_point,
            gain: c.gain,
            bias: c.bias,
            linear_range: (c.linear_low, c.linear_high),
            noise_std: c.noise_std,
            cubic: c.cubic,
        };
        if let Err(e) = curve.validate() {
            check(false, "model.curve", e.to_string());
        }
        check(c.gain != 0.0, "model.curve.gain", "must be nonzero".into());
        let mut curves = [curve; 6];
        if let Some(noise) = &m.noise_std {
            if noise.len() != 6 {
                check(false, "model.noise_std", format!("needs 6 values, got {}", noise.len()));
            } else {
                for (j, v) in noise.iter().enumerate() {
                    check(v.is_finite() && *v >= 0.0, &format!("model.noise_std[{j}]"), format!("must be >= 0, got {v}"));
                    curves[j].noise_std = *v;
                }
            }
        }

        let e = &self.evaluation;
        let ranges = if e.ranges.len() == 6 {
            let r: [f64; 6] = std::array::from_fn(|i| e.ranges[i]);
            match AxisRanges::new(r) {
                Ok(r) => Some(r),
                Err(err) => {
                    check(false, "evaluation.ranges", err.to_string());
                    None
                }
            }
        } else {
            check(false, "evaluation.ranges", format!("needs 6 values, got {}", e.ranges.len()));
            None
        };
        let orientation = CrosstalkOrientation::parse(&e.crosstalk_orientation);
        check(
            orientation.is_some(),
            "evaluation.crosstalk_orientation",
            format!("expected loaded-rows or response-rows, got `{}`", e.crosstalk_orientation),
        );
        let pattern = SignPattern::nominal().with_theta(e.theta);
        if let Err(msg) = &pattern {
            check(false, "evaluation.theta", msg.clone());
        }
        check(e.sweep_points >= 10, "evaluation.sweep_points", format!("must be at least 10, got {}", e.sweep_points));
        let test_kind = TrajectoryKind::parse(&e.test_kind);
        if let Err(err) = &test_kind {
            check(false, "evaluation.test_kind", err.to_string());
        }
        check(positive(e.test_duration), "evaluation.test_duration", format!("must be positive, got {}", e.test_duration));

        let ratios = if m.compliance == "fem" {
            Some(fem_ratios())
        } else {
            let path = base.join(&m.compliance);
            match read_ratio_table(&path) {
                Ok(r) => Some(r),
                Err(msg) => {
                    check(false, "model.compliance", msg);
                    None
                }
            }
        };
        let full_scale = ranges.map_or(DEFAULT_FULL_SCALE, |r| r.0);
        let compliance = ratios.and_then(|r| {
            match ComplianceMap::from_table(r, travel_scale(&r, &full_scale, m.travel_mm)) {
                Ok(c) => Some(c),
                Err(err) => {
                    check(false, "model.compliance", err.to_string());
                    None
                }
            }
        });

        let t = &self.trajectory;
        let kind = TrajectoryKind::parse(&t.kind);
        if let Err(err) = &kind {
            check(false, "trajectory.kind", err.to_string());
        }
        check(positive(t.duration), "trajectory.duration", format!("must be positive, got {}", t.duration));
        check(positive(t.rate), "trajectory.rate", format!("must be positive, got {}", t.rate));
        let amplitudes = match &t.amplitudes {
            Some(a) if a.len() == 6 => {
                check(a.iter().all(|v| v.is_finite()), "trajectory.amplitudes", "values must be finite".into());
                Wrench::from_array(std::array::from_fn(|i| a[i]))
            }
            Some(a) => {
                check(false, "trajectory.amplitudes", format!("needs 6 values, got {}", a.len()));
                Wrench::ZERO
            }
            None => {
                check(
                    t.amplitude_fraction.is_finite() && t.amplitude_fraction >= 0.0,
                    "trajectory.amplitude_fraction",
                    format!("must be >= 0, got {}", t.amplitude_fraction),
                );
                Wrench::from_array(full_scale.map(|v| v * t.amplitude_fraction))
            }
        };

        let cal = &self.calibration;
        let mut methods = Vec::new();
        for (i, name) in cal.methods.iter().enumerate() {
            match MethodKind::parse(name) {
                Some(k) if !methods.contains(&k) => methods.push(k),
                Some(_) => check(false, &format!("calibration.methods[{i}]"), format!("duplicate method `{name}`")),
                None => check(
                    false,
                    &format!("calibration.methods[{i}]"),
                    format!("unknown method `{name}` (expected pinv, qp, ridge or mlp)"),
                ),
            }
        }
        check(!cal.methods.is_empty(), "calibration.methods", "at least one method is required".into());
        check(cal.slack.is_finite() && cal.slack >= 0.0, "calibration.slack", format!("must be >= 0, got {}", cal.slack));
        check(
            cal.ridge_lambda.is_finite() && cal.ridge_lambda >= 0.0,
            "calibration.ridge_lambda",
            format!("must be >= 0, got {}", cal.ridge_lambda),
        );
        check(
            (1..=2).contains(&cal.ridge_degree),
            "calibration.ridge_degree",
            format!("must be 1 or 2, got {}", cal.ridge_degree),
        );
        check(
            positive(cal.mlp_learning_rate),
            "calibration.mlp_learning_rate",
            format!("must be positive, got {}", cal.mlp_learning_rate),
        );
        let kalman = KalmanParams { q: cal.kalman_q, r: cal.kalman_r, ..KalmanParams::default() };
        if let Err(msg) = kalman.validate() {
            check(false, "calibration.kalman_q/kalman_r", msg);
        }

        let d = &self.demo;
        let mut demo_axes = Vec::new();
        for (i, name) in d.axes.iter().enumerate() {
            match name.parse::<Axis>() {
                Ok(a) if !demo_axes.contains(&a) => demo_axes.push(a),
                Ok(_) => check(false, &format!("demo.axes[{i}]"), format!("duplicate axis `{name}`")),
                Err(err) => check(false, &format!("demo.axes[{i}]"), err.to_string()),
            }
        }
        check(
            (1..=5).contains(&d.axes.len()),
            "demo.axes",
            format!("needs 1 to 5 axes, got {}", d.axes.len()),
        );
        check(d.seeds >= 1, "demo.seeds", "must be at least 1".into());
        check(positive(d.train_duration), "demo.train_duration", format!("must be positive, got {}", d.train_duration));
        check(positive(d.test_duration), "demo.test_duration", format!("must be positive, got {}", d.test_duration));
        check(d.required_wins <= 6, "demo.required_wins", format!("must be at most 6, got {}", d.required_wins));

        if !issues.is_empty() {
            return Err(PipelineError::Config(issues));
        }
        let compliance = compliance.expect("validated");
        let model = SensorModel { compliance, curves, adc: m.adc };
        let constraints = default_constraints(&model.compliance, cal.slack);
        let ranges = ranges.expect("validated");
        let ctx = EvalContext {
            ranges,
            model: Some(model.clone()),
            constraints: constraints.sets.clone(),
            slack: Some(cal.slack),
            ridge_lambda: cal.ridge_lambda,
            ridge_degree: cal.ridge_degree,
            mlp: MlpSettings { epochs: cal.mlp_epochs, learning_rate: cal.mlp_learning_rate, seed: t.seed },
            sweep_points: e.sweep_points,
            orientation: orientation.expect("validated"),
        };
        Ok(Experiment {
            config: self.clone(),
            model,
            train_kind: kind.expect("validated"),
            duration: t.duration,
            rate: t.rate,
            amplitudes,
            seed: t.seed,
            methods,
            constraints,
            kalman: cal.kalman.then_some(kalman),
            ctx,
            pattern: pattern.expect("validated"),
            test_kind: test_kind.expect("validated"),
            test_duration: e.test_duration,
            test_noise: e.test_noise,
            demo_axes,
            demo: d.clone(),
        })
    }
}

fn read_ratio_table(path: &PathBuf) -> Result<Matrix6<f64>, String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    let rows: Vec<&str> = text.lines().filter(|l| !l.trim().is_empty() && !l.starts_with('#')).collect();
    if rows.len() != 6 {
        return Err(format!("{}: expected 6 rows, found {}", path.display(), rows.len()));
    }
    let mut m = Matrix6::zeros();
    for (r, line) in rows.iter().enumerate() {
        let vals: Vec<&str> = line.split(',').collect();
        if vals.len() != 6 {
            return Err(format!("{}: row {} has {} values", path.display(), r + 1, vals.len()));
        }
        for (c, v) in vals.iter().enumerate() {
            m[(r, c)] = v
                .trim()
                .parse()
                .map_err(|_| format!("{}: row {} column {}: `{v}` is not a number", path.display(), r + 1, c + 1))?;
        }
    }
    Ok(m)
}

/// A validated, resolved experiment.
#[derive(Debug, Clone)]
pub struct Experiment {
    pub config: ExperimentConfig,
    pub model: SensorModel,
    pub train_kind: TrajectoryKind,
    pub duration: f64,
    pub rate: f64,
    pub amplitudes: Wrench,
    pub seed: u64,
    pub methods: Vec<MethodKind>,
    pub constraints: StructuralConstraints,
    pub kalman: Option<KalmanParams>,
    pub ctx: EvalContext,
    pub pattern: SignPattern,
    pub test_kind: TrajectoryKind,
    pub test_duration: f64,
    pub test_noise: bool,
    pub demo_axes: Vec<Axis>,
    pub demo: DemoSection,
}

impl Experiment {
    pub fn training_data(&self) -> Result<Dataset, PipelineError> {
        let traj = generate_trajectory(&self.train_kind, self.duration, self.rate, &self.amplitudes)?;
        Ok(simulate_dataset(&self.model, &traj, self.seed))
    }

    /// Held-out data on its own noise stream.
    pub fn test_data(&self) -> Result<Dataset, PipelineError> {
        let traj = generate_trajectory(&self.test_kind, self.test_duration, self.rate, &self.amplitudes)?;
        let model = if self.test_noise { self.model.clone() } else { self.model.noiseless() };
        Ok(simulate_with_stream(&model, &traj, self.seed, Stream::TestNoise))
    }

    /// Training data confined to the demo axes, for `seed`.
    pub fn demo_training_data(&self, seed: u64) -> Result<Dataset, PipelineError> {
        let kind = TrajectoryKind::Degenerate { axes: self.demo_axes.clone() };
        let traj = generate_trajectory(&kind, self.demo.train_duration, self.rate, &self.amplitudes)?;
        Ok(simulate_dataset(&self.model, &traj, seed))
    }

    /// Noise-free fully excited held-out data for the demo.
    pub fn demo_test_data(&self, seed: u64) -> Result<Dataset, PipelineError> {
        let traj = generate_trajectory(&TrajectoryKind::Mixed, self.demo.test_duration, self.rate, &self.amplitudes)?;
        Ok(simulate_with_stream(&self.model.noiseless(), &traj, seed, Stream::TestNoise))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate() {
        let exp = ExperimentConfig::default().validate(Path::new(".")).unwrap();
        assert_eq!(exp.methods, vec![MethodKind::PseudoInverse, MethodKind::ConstrainedQp]);
        assert_eq!(exp.constraints.slack, 20.0);
        assert!(exp.kalman.is_none());
    }

    #[test]
    fn unknown_key_is_located() {
        let err = ExperimentConfig::from_toml("[trajectory]\nrate = 10.0\nspeed = 3\n").unwrap_err();
        match err {
            PipelineError::Config(issues) => {
                assert_eq!(issues[0].position.map(|p| p.0), Some(3));
                assert!(issues[0].message.contains("speed"));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn all_semantic_issues_are_reported() {
        let text = "[trajectory]\nduration = -1.0\nkind = \"spiral\"\n[calibration]\nmethods = [\"svm\"]\n";
        let cfg = ExperimentConfig::from_toml(text).unwrap();
        match cfg.validate(Path::new(".")) {
            Err(PipelineError::Config(issues)) => {
                let keys: Vec<&str> = issues.iter().map(|i| i.key.as_str()).collect();
                assert!(keys.contains(&"trajectory.duration"));
                assert!(keys.contains(&"trajectory.kind"));
                assert!(keys.contains(&"calibration.methods[0]"));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn canonical_text_round_trips() {
        let cfg = ExperimentConfig::default();
        assert_eq!(ExperimentConfig::from_toml(&cfg.to_toml()).unwrap(), cfg);
    }
}
