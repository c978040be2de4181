use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use super::{
    kalman_filter_dataset, load_calibration_matrix, load_dataset, sha256_hex, write_calibration_matrix,
    Experiment, ExperimentConfig, Manifest, PipelineError,
};
use crate::calib::fixtures::{published_constrained, published_pseudo_inverse};
use crate::calib::{check_sign_structure, CalibrationMatrix, MlpCalibrator, PolyCalibrator, SignViolation};
use crate::eval::{compare_methods, full_scale_error, FittedCalibrator, MethodKind, MetricsReport};
use crate::{Dataset, Wrench, AXES};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Simulate,
    Calibrate,
    Evaluate,
    Compare,
    CheckSigns,
    DemoNullspace,
}

impl Command {
    pub const fn name(self) -> &'static str {
        match self {
            Command::Simulate => "simulate",
            Command::Calibrate => "calibrate",
            Command::Evaluate => "evaluate",
            Command::Compare => "compare",
            Command::CheckSigns => "check-signs",
            Command::DemoNullspace => "demo-nullspace",
        }
    }
}

/// Inputs shared by every command. Unused fields are ignored.
#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub config: Option<PathBuf>,
    pub seed: Option<u64>,
    pub out: PathBuf,
    /// Replaces `calibration.methods` when non-empty.
    pub methods: Vec<String>,
    /// Training dataset CSV instead of simulating one.
    pub data: Option<PathBuf>,
    /// Held-out dataset CSV instead of simulating one.
    pub test: Option<PathBuf>,
    /// Calibration matrix CSV for `evaluate` and `check-signs`.
    pub matrix: Option<PathBuf>,
    /// Built-in published matrix for `check-signs`: `pseudo-inverse` or
    /// `constrained`.
    pub fixture: Option<String>,
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub exit_code: i32,
    pub manifest: Manifest,
    /// Human-readable summary for stdout.
    pub summary: String,
}

/// Runs `cmd` and writes `manifest.toml` into `opts.out`, also on failure.
pub fn run(cmd: Command, opts: &RunOptions) -> RunOutcome {
    let mut manifest = Manifest::new(cmd.name(), opts.seed.unwrap_or(0));
    let mut summary = String::new();
    if let Err(e) = execute(cmd, opts, &mut manifest, &mut summary) {
        manifest.fail(&e);
    }
    let text = manifest.to_toml();
    let path = opts.out.join("manifest.toml");
    if std::fs::create_dir_all(&opts.out).and_then(|_| std::fs::write(&path, &text)).is_err() {
        manifest.errors.push(format!("could not write {}", path.display()));
        if manifest.exit_code == 0 {
            manifest.exit_code = 2;
            manifest.status = super::RunStatus::RuntimeError;
        }
    }
    RunOutcome { exit_code: manifest.exit_code, manifest, summary }
}

fn resolve(opts: &RunOptions) -> Result<(Experiment, String), PipelineError> {
    let (mut cfg, base) = match &opts.config {
        Some(p) => (ExperimentConfig::load(p)?, p.parent().map(Path::to_path_buf).unwrap_or_default()),
        None => (ExperimentConfig::default(), PathBuf::from(".")),
    };
    if let Some(seed) = opts.seed {
        cfg.trajectory.seed = seed;
    }
    if !opts.methods.is_empty() {
        cfg.calibration.methods = opts
            .methods
            .iter()
            .flat_map(|m| m.split(','))
            .map(|m| m.trim().to_string())
            .filter(|m| !m.is_empty())
            .collect();
    }
    let exp = cfg.validate(&base)?;
    Ok((exp, cfg.to_toml()))
}

fn execute(cmd: Command, opts: &RunOptions, manifest: &mut Manifest, summary: &mut String) -> Result<(), PipelineError> {
    std::fs::create_dir_all(&opts.out).map_err(|e| PipelineError::io(&opts.out, e))?;
    let (exp, config_text) = resolve(opts)?;
    manifest.seed = exp.seed;
    manifest.config_sha256 = sha256_hex(config_text.as_bytes());
    manifest.emit(&opts.out, "config.toml", config_text.as_bytes())?;
    match cmd {
        Command::Simulate => simulate(&exp, opts, manifest, summary),
        Command::Calibrate => calibrate(&exp, opts, manifest, summary),
        Command::Evaluate => evaluate(&exp, opts, manifest, summary),
        Command::Compare => compare(&exp, opts, manifest, summary),
        Command::CheckSigns => check_signs(&exp, opts, manifest, summary),
        Command::DemoNullspace => demo_nullspace(&exp, opts, manifest, summary),
    }
}

fn emit_dataset(dir: &Path, name: &str, data: &Dataset, manifest: &mut Manifest) -> Result<(), PipelineError> {
    let path = dir.join(name);
    super::save_dataset(data, &path)?;
    let side = super::sidecar_path(&path);
    for (file, p) in [(name.to_string(), &path), (format!("{name}.meta.toml"), &side)] {
        let bytes = std::fs::read(p).map_err(|e| PipelineError::io(p, e))?;
        manifest.files.insert(file, sha256_hex(&bytes));
    }
    Ok(())
}

fn input_dataset(
    path: Option<&PathBuf>,
    key: &str,
    manifest: &mut Manifest,
    simulate: impl FnOnce() -> Result<Dataset, PipelineError>,
    exp: &Experiment,
) -> Result<Dataset, PipelineError> {
    let data = match path {
        Some(p) => {
            let bytes = std::fs::read(p).map_err(|e| PipelineError::io(p, e))?;
            manifest.record(&format!("{key}_sha256"), sha256_hex(&bytes));
            load_dataset(p)?
        }
        None => simulate()?,
    };
    manifest.record(&format!("{key}_samples"), data.len() as i64);
    Ok(match &exp.kalman {
        Some(k) => kalman_filter_dataset(&data, k),
        None => data,
    })
}

fn training(exp: &Experiment, opts: &RunOptions, manifest: &mut Manifest) -> Result<Dataset, PipelineError> {
    input_dataset(opts.data.as_ref(), "train", manifest, || exp.training_data(), exp)
}

fn held_out(exp: &Experiment, opts: &RunOptions, manifest: &mut Manifest) -> Result<Dataset, PipelineError> {
    input_dataset(opts.test.as_ref(), "test", manifest, || exp.test_data(), exp)
}

fn array(v: &[f64]) -> toml::Value {
    toml::Value::Array(v.iter().map(|x| toml::Value::Float(*x)).collect())
}

fn simulate(exp: &Experiment, opts: &RunOptions, manifest: &mut Manifest, summary: &mut String) -> Result<(), PipelineError> {
    let train = exp.training_data()?;
    let test = exp.test_data()?;
    emit_dataset(&opts.out, "dataset.csv", &train, manifest)?;
    emit_dataset(&opts.out, "heldout.csv", &test, manifest)?;
    manifest.record("train_samples", train.len() as i64);
    manifest.record("test_samples", test.len() as i64);
    manifest.record("saturated_samples", train.metadata.saturated_samples as i64);
    let _ = writeln!(
        summary,
        "simulated {} training and {} held-out samples ({}, seed {})",
        train.len(),
        test.len(),
        train.metadata.trajectory,
        exp.seed
    );
    Ok(())
}

fn kkt_report(c: &CalibrationMatrix) -> String {
    let mut s = String::from("axis,stationarity,primal,dual,complementarity,active_set,iterations,ridge,rank_deficient\n");
    for solve in &c.diagnostics.axes {
        let k = &solve.solution.kkt;
        let active: Vec<String> = solve.solution.active_set.iter().map(|i| i.to_string()).collect();
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{},{}",
            solve.axis,
            k.stationarity,
            k.primal,
            k.dual,
            k.complementarity,
            active.join(" "),
            solve.solution.iterations,
            solve.solution.ridge.map_or_else(|| "none".to_string(), |r| r.to_string()),
            solve.assembled.rank_deficient
        );
    }
    s
}

fn poly_csv(p: &PolyCalibrator) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "# ridge calibration: w = K phi(s) + offset, phi = s then s^2 when degree = 2");
    let _ = writeln!(s, "# representation = {}", p.representation.name());
    let _ = writeln!(s, "# degree = {}", p.degree);
    let _ = writeln!(s, "# lambda = {}", p.lambda);
    for (a, axis) in AXES.iter().enumerate() {
        let _ = write!(s, "{axis}");
        for v in p.coefficients.row(a).iter() {
            let _ = write!(s, ",{v}");
        }
        let _ = writeln!(s, ",{}", p.offset[a]);
    }
    s
}

fn mlp_csv(m: &MlpCalibrator) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "# network 6-{}-6 tanh, parameters flattened w1,b1,w2,b2 column-major", m.network.hidden());
    let _ = writeln!(s, "# representation = {}", m.representation.name());
    let _ = writeln!(s, "# best_epoch = {}", m.history.best_epoch);
    let line = |s: &mut String, name: &str, v: &[f64]| {
        let _ = write!(s, "{name}");
        for x in v {
            let _ = write!(s, ",{x}");
        }
        s.push('\n');
    };
    line(&mut s, "input_mean", &m.input_mean);
    line(&mut s, "input_std", &m.input_std);
    line(&mut s, "output_mean", &m.output_mean);
    line(&mut s, "output_std", &m.output_std);
    line(&mut s, "parameters", &m.network.to_flat());
    s
}

fn signs_text(label: &str, violations: &[SignViolation]) -> String {
    let mut s = format!("{label}: {} sign violation(s)\n", violations.len());
    for v in violations {
        let _ = writeln!(s, "  {v}");
    }
    s
}

fn calibrate(exp: &Experiment, opts: &RunOptions, manifest: &mut Manifest, summary: &mut String) -> Result<(), PipelineError> {
    let train = training(exp, opts, manifest)?;
    for &kind in &exp.methods {
        let fitted = exp.ctx.fit(kind, &train)?;
        let label = kind.label();
        match &fitted {
            FittedCalibrator::Linear(c) => {
                manifest.emit(&opts.out, &format!("matrix_{label}.csv"), write_calibration_matrix(c).as_bytes())?;
                let violations = check_sign_structure(&c.matrix, &exp.pattern);
                manifest.record(&format!("{label}_sign_violations"), violations.len() as i64);
                manifest.record(&format!("{label}_rank"), c.diagnostics.rank as i64);
                if kind == MethodKind::ConstrainedQp {
                    manifest.emit(&opts.out, "kkt_report.csv", kkt_report(c).as_bytes())?;
                    let worst: Vec<f64> = c.diagnostics.axes.iter().map(|a| a.solution.kkt.max()).collect();
                    manifest.record("qp_kkt_max", array(&worst));
                    for solve in &c.diagnostics.axes {
                        let dump = format!(
                            "# problem\n{}# solution\n{}",
                            solve.assembled.problem.dump(),
                            solve.solution.dump()
                        );
                        manifest.emit(&opts.out, &format!("qp_{}.txt", solve.axis), dump.as_bytes())?;
                    }
                }
                let _ = writeln!(summary, "{label}: rank {}, {} sign violation(s)", c.diagnostics.rank, violations.len());
            }
            FittedCalibrator::Poly(p) => {
                manifest.emit(&opts.out, &format!("{label}_coefficients.csv"), poly_csv(p).as_bytes())?;
                let _ = writeln!(summary, "{label}: degree {}, lambda {}", p.degree, p.lambda);
            }
            FittedCalibrator::Mlp(m) => {
                manifest.emit(&opts.out, "mlp_network.csv", mlp_csv(m).as_bytes())?;
                manifest.record("mlp_validation_loss", m.validation_loss());
                let _ = writeln!(summary, "{label}: validation loss {}", m.validation_loss());
            }
        }
    }
    Ok(())
}

fn emit_metrics(
    dir: &Path,
    label: &str,
    report: &MetricsReport,
    exp: &Experiment,
    manifest: &mut Manifest,
) -> Result<(), PipelineError> {
    let o = exp.ctx.orientation;
    manifest.emit(dir, &format!("metrics_{label}.csv"), report.to_csv(o).as_bytes())?;
    manifest.emit(dir, &format!("metrics_{label}.txt"), report.to_text(o).as_bytes())?;
    let means: Vec<f64> = report.fse.iter().map(|s| s.mean).collect();
    manifest.record(&format!("{label}_fse_mean"), array(&means));
    Ok(())
}

fn evaluate(exp: &Experiment, opts: &RunOptions, manifest: &mut Manifest, summary: &mut String) -> Result<(), PipelineError> {
    let test = held_out(exp, opts, manifest)?;
    let mut fitted: Vec<(String, FittedCalibrator)> = Vec::new();
    if let Some(p) = &opts.matrix {
        fitted.push(("external".into(), FittedCalibrator::Linear(load_calibration_matrix(p)?)));
    } else {
        let train = training(exp, opts, manifest)?;
        for &kind in &exp.methods {
            fitted.push((kind.label().into(), exp.ctx.fit(kind, &train)?));
        }
    }
    for (label, f) in &fitted {
        let report = exp.ctx.evaluate(f, label, &test)?;
        emit_metrics(&opts.out, label, &report, exp, manifest)?;
        let _ = writeln!(summary, "{label}:\n{}", report.to_text(exp.ctx.orientation));
    }
    Ok(())
}

fn compare(exp: &Experiment, opts: &RunOptions, manifest: &mut Manifest, summary: &mut String) -> Result<(), PipelineError> {
    let train = training(exp, opts, manifest)?;
    let test = held_out(exp, opts, manifest)?;
    let report = compare_methods(&train, &test, &exp.methods, &exp.ctx)?;
    manifest.emit(&opts.out, "comparison.csv", report.to_csv().as_bytes())?;
    manifest.emit(&opts.out, "comparison.txt", report.to_text().as_bytes())?;
    for r in &report.results {
        emit_metrics(&opts.out, r.kind.label(), &r.metrics, exp, manifest)?;
    }
    if let Some(ratio) = &report.improvement_ratio {
        manifest.record("pinv_over_qp_fse_ratio", array(ratio));
    }
    summary.push_str(&report.to_text());
    Ok(())
}

fn check_signs(exp: &Experiment, opts: &RunOptions, manifest: &mut Manifest, summary: &mut String) -> Result<(), PipelineError> {
    let (label, matrix) = match (&opts.matrix, opts.fixture.as_deref()) {
        (Some(p), None) => (p.display().to_string(), load_calibration_matrix(p)?.matrix),
        (None, Some("pseudo-inverse")) => ("published pseudo-inverse".to_string(), published_pseudo_inverse()),
        (None, Some("constrained")) => ("published constrained".to_string(), published_constrained()),
        (None, Some(other)) => {
            return Err(PipelineError::Invalid(format!(
                "unknown fixture `{other}` (expected pseudo-inverse or constrained)"
            )))
        }
        (Some(_), Some(_)) => return Err(PipelineError::Invalid("give either --matrix or --fixture, not both".into())),
        (None, None) => return Err(PipelineError::Invalid("check-signs needs --matrix or --fixture".into())),
    };
    let violations = check_sign_structure(&matrix, &exp.pattern);
    let text = signs_text(&label, &violations);
    manifest.emit(&opts.out, "signs.txt", text.as_bytes())?;
    manifest.record("sign_violations", violations.len() as i64);
    manifest.record(
        "violations",
        toml::Value::Array(violations.iter().map(|v| toml::Value::String(v.to_string())).collect()),
    );
    summary.push_str(&text);
    if violations.is_empty() {
        Ok(())
    } else {
        Err(PipelineError::Validation(format!("{} sign violation(s) in {label}", violations.len())))
    }
}

fn held_out_fse(c: &CalibrationMatrix, test: &Dataset, exp: &Experiment) -> Result<[f64; 6], PipelineError> {
    use crate::calib::Calibrator;
    let pred: Vec<Wrench> = test.frames().map(|f| c.apply(f)).collect::<Result<_, _>>()?;
    Ok(full_scale_error(&pred, &test.wrenches(), &exp.ctx.ranges)?.map(|s| s.mean))
}

fn linear(f: FittedCalibrator) -> CalibrationMatrix {
    match f {
        FittedCalibrator::Linear(c) => c,
        _ => unreachable!("pinv and qp are linear"),
    }
}

/// Relative tolerance under which two held-out errors count as equal.
const TIE_TOLERANCE: f64 = 1e-9;

fn demo_nullspace(exp: &Experiment, opts: &RunOptions, manifest: &mut Manifest, summary: &mut String) -> Result<(), PipelineError> {
    let seeds = exp.demo.seeds as u64;
    let mut pinv_sum = [0.0; 6];
    let mut qp_sum = [0.0; 6];
    let mut seed_wins = [0i64; 6];
    let mut rows = String::from("seed,method,fx,fy,fz,mx,my,mz\n");
    for k in 0..seeds {
        let seed = exp.seed + k;
        let train = exp.demo_training_data(seed)?;
        let test = exp.demo_test_data(seed)?;
        let pinv = linear(exp.ctx.fit(MethodKind::PseudoInverse, &train)?);
        let qp = linear(exp.ctx.fit(MethodKind::ConstrainedQp, &train)?);
        let (ep, eq) = (held_out_fse(&pinv, &test, exp)?, held_out_fse(&qp, &test, exp)?);
        for (label, e) in [("pinv", &ep), ("qp", &eq)] {
            let _ = write!(rows, "{seed},{label}");
            for v in e {
                let _ = write!(rows, ",{v}");
            }
            rows.push('\n');
        }
        for a in 0..6 {
            pinv_sum[a] += ep[a];
            qp_sum[a] += eq[a];
            if eq[a] <= ep[a] * (1.0 + TIE_TOLERANCE) {
                seed_wins[a] += 1;
            }
        }
        if k == 0 {
            manifest.record("train_rank", pinv.diagnostics.rank as i64);
            manifest.record("null_space_present", pinv.diagnostics.null_space_present);
            for (label, c) in [("pinv", &pinv), ("qp", &qp)] {
                manifest.emit(&opts.out, &format!("matrix_{label}.csv"), write_calibration_matrix(c).as_bytes())?;
                let v = check_sign_structure(&c.matrix, &exp.pattern);
                manifest.emit(&opts.out, &format!("signs_{label}.txt"), signs_text(label, &v).as_bytes())?;
                manifest.record(&format!("{label}_sign_violations"), v.len() as i64);
            }
        }
    }
    manifest.emit(&opts.out, "heldout_fse.csv", rows.as_bytes())?;
    let n = seeds as f64;
    let pinv_mean = pinv_sum.map(|v| v / n);
    let qp_mean = qp_sum.map(|v| v / n);
    let ratio: [f64; 6] = std::array::from_fn(|a| if qp_mean[a] > 0.0 { pinv_mean[a] / qp_mean[a] } else { 1.0 });
    let wins: Vec<bool> = (0..6).map(|a| qp_mean[a] <= pinv_mean[a] * (1.0 + TIE_TOLERANCE)).collect();
    let axes_won = wins.iter().filter(|w| **w).count();
    manifest.record("seeds", seeds as i64);
    manifest.record("pinv_heldout_fse_mean", array(&pinv_mean));
    manifest.record("qp_heldout_fse_mean", array(&qp_mean));
    manifest.record("improvement_ratio", array(&ratio));
    manifest.record("qp_not_worse", toml::Value::Array(wins.iter().map(|w| toml::Value::Boolean(*w)).collect()));
    manifest.record("qp_seed_wins", toml::Value::Array(seed_wins.iter().map(|w| toml::Value::Integer(*w)).collect()));
    manifest.record("axes_won", axes_won as i64);
    manifest.record("required_wins", exp.demo.required_wins as i64);

    let _ = writeln!(summary, "held-out FSE mean over {seeds} seed(s), training axes {:?}", exp.demo.axes);
    let _ = writeln!(summary, "{:<6} {:>10} {:>10} {:>8}", "axis", "pinv%", "qp%", "ratio");
    for a in AXES {
        let i = a.index();
        let _ = writeln!(summary, "{:<6} {:>10.4} {:>10.4} {:>8.3}", a.name(), pinv_mean[i], qp_mean[i], ratio[i]);
    }
    let _ = writeln!(summary, "qp not worse on {axes_won} of 6 axes (required {})", exp.demo.required_wins);
    if axes_won < exp.demo.required_wins {
        return Err(PipelineError::Validation(format!(
            "constrained fit not worse on only {axes_won} of 6 axes, required {}",
            exp.demo.required_wins
        )));
    }
    Ok(())
}
