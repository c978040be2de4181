use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use nalgebra::{Matrix6, Vector6};
use serde::{Deserialize, Serialize};

use super::PipelineError;
use crate::calib::{CalibrationMatrix, LinearMethod};
use crate::model::{DatasetMetadata, Representation, Sample, SensorFrame, ADC_FULL_SCALE_VOLTS};
use crate::{Dataset, Wrench, AXES};

pub const DATASET_HEADER: &str = "t,s1,s2,s3,s4,s5,s6,fx,fy,fz,mx,my,mz";

const MATRIX_HEADER: &str = "axis,s1,s2,s3,s4,s5,s6";

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Sidecar {
    representation: String,
    sample_rate: f64,
    trajectory: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    seed: Option<u64>,
    adc: bool,
    noise_std: [f64; 6],
    saturated_samples: usize,
}

/// `<path>.meta.toml`, holding what the CSV columns cannot.
pub fn sidecar_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".meta.toml");
    PathBuf::from(s)
}

/// CSV text of `data`. Floats use the shortest representation that parses
/// back to the same value.
pub fn write_dataset(data: &Dataset) -> String {
    let mut s = String::with_capacity(data.len() * 200 + 64);
    s.push_str(DATASET_HEADER);
    s.push('\n');
    for sample in data.samples() {
        let _ = write!(s, "{}", sample.frame.t);
        for v in sample.frame.values {
            let _ = write!(s, ",{v}");
        }
        for v in sample.wrench.to_array() {
            let _ = write!(s, ",{v}");
        }
        s.push('\n');
    }
    s
}

fn write_sidecar(data: &Dataset) -> String {
    let m = &data.metadata;
    let sidecar = Sidecar {
        representation: data.representation().unwrap_or(Representation::Volts).name().to_string(),
        sample_rate: data.sample_rate,
        trajectory: m.trajectory.clone(),
        seed: m.seed,
        adc: m.adc,
        noise_std: m.noise_std,
        saturated_samples: m.saturated_samples,
    };
    toml::to_string(&sidecar).expect("sidecar is serializable")
}

/// Writes the CSV and its sidecar.
pub fn save_dataset(data: &Dataset, path: &Path) -> Result<(), PipelineError> {
    std::fs::write(path, write_dataset(data)).map_err(|e| PipelineError::io(path, e))?;
    let side = sidecar_path(path);
    std::fs::write(&side, write_sidecar(data)).map_err(|e| PipelineError::io(&side, e))
}

/// Reads a dataset CSV. Representation, sample rate and metadata come from
/// the sidecar when present; otherwise they are inferred from the values.
pub fn load_dataset(path: &Path) -> Result<Dataset, PipelineError> {
    let text = std::fs::read_to_string(path).map_err(|e| PipelineError::io(path, e))?;
    let side = sidecar_path(path);
    let sidecar = if side.exists() {
        let t = std::fs::read_to_string(&side).map_err(|e| PipelineError::io(&side, e))?;
        Some(toml::from_str::<Sidecar>(&t).map_err(|e| PipelineError::io(&side, e.message()))?)
    } else {
        None
    };
    let (rows, wrenches) = parse_rows(&text)?;
    let representation = match &sidecar {
        Some(s) => Representation::parse(&s.representation)
            .ok_or_else(|| PipelineError::io(&side, format!("unknown representation `{}`", s.representation)))?,
        None => infer_representation(&rows),
    };
    let (sample_rate, metadata) = match sidecar {
        Some(s) => (
            s.sample_rate,
            DatasetMetadata {
                seed: s.seed,
                trajectory: s.trajectory,
                noise_std: s.noise_std,
                adc: s.adc,
                saturated_samples: s.saturated_samples,
            },
        ),
        None => (infer_rate(&rows), DatasetMetadata { adc: representation == Representation::Counts, ..Default::default() }),
    };
    let samples = rows
        .iter()
        .zip(wrenches)
        .map(|((t, values), wrench)| Sample { frame: SensorFrame::new(*t, *values, representation), wrench })
        .collect();
    Ok(Dataset::new(samples, sample_rate, metadata)?)
}

/// Parses dataset CSV text with inferred representation and sample rate.
pub fn parse_dataset(text: &str) -> Result<Dataset, PipelineError> {
    let (rows, wrenches) = parse_rows(text)?;
    let representation = infer_representation(&rows);
    let samples = rows
        .iter()
        .zip(wrenches)
        .map(|((t, values), wrench)| Sample { frame: SensorFrame::new(*t, *values, representation), wrench })
        .collect();
    Ok(Dataset::new(samples, infer_rate(&rows), DatasetMetadata::default())?)
}

type Rows = (Vec<(f64, [f64; 6])>, Vec<Wrench>);

fn parse_rows(text: &str) -> Result<Rows, PipelineError> {
    let mut lines = text.split('\n');
    let header = lines.next().unwrap_or("");
    if header != DATASET_HEADER {
        return Err(PipelineError::HeaderMismatch { expected: DATASET_HEADER.to_string(), found: header.to_string() });
    }
    let mut rows = Vec::new();
    let mut wrenches = Vec::new();
    let mut ended = false;
    for (k, line) in lines.enumerate() {
        let line_no = k + 2;
        if line.is_empty() {
            ended = true;
            continue;
        }
        if ended {
            return Err(PipelineError::Parse { line: line_no - 1, column: 1, message: "empty line".into() });
        }
        let mut v = [0.0; 13];
        let mut count = 0;
        for (c, field) in line.split(',').enumerate() {
            if c >= 13 {
                return Err(PipelineError::Parse { line: line_no, column: c + 1, message: "more than 13 fields".into() });
            }
            v[c] = field.parse::<f64>().map_err(|_| PipelineError::Parse {
                line: line_no,
                column: c + 1,
                message: format!("`{field}` is not a number"),
            })?;
            if !v[c].is_finite() {
                return Err(PipelineError::Parse { line: line_no, column: c + 1, message: format!("`{field}` is not finite") });
            }
            count = c + 1;
        }
        if count < 13 {
            return Err(PipelineError::Parse {
                line: line_no,
                column: count + 1,
                message: format!("expected 13 fields, found {count}"),
            });
        }
        rows.push((v[0], [v[1], v[2], v[3], v[4], v[5], v[6]]));
        wrenches.push(Wrench::new(v[7], v[8], v[9], v[10], v[11], v[12]));
    }
    Ok((rows, wrenches))
}

fn infer_representation(rows: &[(f64, [f64; 6])]) -> Representation {
    let integral = rows.iter().all(|(_, v)| v.iter().all(|x| x.fract() == 0.0));
    let above_rail = rows.iter().any(|(_, v)| v.iter().any(|x| *x > ADC_FULL_SCALE_VOLTS));
    if integral && above_rail {
        Representation::Counts
    } else {
        Representation::Volts
    }
}

fn infer_rate(rows: &[(f64, [f64; 6])]) -> f64 {
    match (rows.first(), rows.last()) {
        (Some(a), Some(b)) if rows.len() > 1 && b.0 > a.0 => (rows.len() - 1) as f64 / (b.0 - a.0),
        _ => 1.0,
    }
}

/// CSV text of a linear calibration: `#` header lines, then one row per
/// axis and a final offset row.
pub fn write_calibration_matrix(c: &CalibrationMatrix) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "# calibration matrix: w = C s + offset");
    let _ = writeln!(s, "# rows fx..mz, columns sensors s1..s6; the offset row lists fx..mz");
    let _ = writeln!(s, "# representation = {}", c.representation.name());
    let _ = writeln!(s, "# method = {}", c.method.label());
    if let Some(slack) = c.diagnostics.slack {
        let _ = writeln!(s, "# slack = {slack}");
    }
    if c.diagnostics.rank > 0 {
        let _ = writeln!(s, "# rank = {}", c.diagnostics.rank);
        let _ = writeln!(s, "# null_space_present = {}", c.diagnostics.null_space_present);
    }
    for solve in &c.diagnostics.axes {
        let k = &solve.solution.kkt;
        let _ = writeln!(
            s,
            "# kkt_{} = stationarity {} primal {} dual {} complementarity {}",
            solve.axis, k.stationarity, k.primal, k.dual, k.complementarity
        );
    }
    s.push_str(MATRIX_HEADER);
    s.push('\n');
    for axis in AXES {
        let _ = write!(s, "{axis}");
        for v in c.matrix.row(axis.index()).iter() {
            let _ = write!(s, ",{v}");
        }
        s.push('\n');
    }
    s.push_str("offset");
    for v in c.offset.iter() {
        let _ = write!(s, ",{v}");
    }
    s.push('\n');
    s
}

pub fn save_calibration_matrix(c: &CalibrationMatrix, path: &Path) -> Result<(), PipelineError> {
    std::fs::write(path, write_calibration_matrix(c)).map_err(|e| PipelineError::io(path, e))
}

pub fn load_calibration_matrix(path: &Path) -> Result<CalibrationMatrix, PipelineError> {
    let text = std::fs::read_to_string(path).map_err(|e| PipelineError::io(path, e))?;
    parse_calibration_matrix(&text)
}

/// Inverse of [`write_calibration_matrix`]. The offset row is optional.
/// Only `representation`, `method` and `slack` are read from the header.
pub fn parse_calibration_matrix(text: &str) -> Result<CalibrationMatrix, PipelineError> {
    let mut representation = Representation::Volts;
    let mut method = LinearMethod::External;
    let mut slack = None;
    let mut matrix = Matrix6::zeros();
    let mut offset = Vector6::zeros();
    let mut seen = [false; 6];
    let mut header_seen = false;
    let parse_err = |line: usize, column: usize, message: String| PipelineError::Parse { line, column, message };
    for (k, line) in text.lines().enumerate() {
        let line_no = k + 1;
        if line.trim().is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix('#') {
            if let Some((key, value)) = rest.split_once('=') {
                let value = value.trim();
                match key.trim() {
                    "representation" => {
                        representation = Representation::parse(value)
                            .ok_or_else(|| parse_err(line_no, 1, format!("unknown representation `{value}`")))?
                    }
                    "method" => {
                        method = LinearMethod::parse(value)
                            .ok_or_else(|| parse_err(line_no, 1, format!("unknown method `{value}`")))?
                    }
                    "slack" => {
                        slack = Some(value.parse::<f64>().map_err(|_| parse_err(line_no, 1, format!("bad slack `{value}`")))?)
                    }
                    _ => {}
                }
            }
            continue;
        }
        if !header_seen {
            if line != MATRIX_HEADER {
                return Err(PipelineError::HeaderMismatch { expected: MATRIX_HEADER.to_string(), found: line.to_string() });
            }
            header_seen = true;
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 7 {
            return Err(parse_err(line_no, fields.len().min(7) + 1, format!("expected 7 fields, found {}", fields.len())));
        }
        let mut v = [0.0; 6];
        for (c, f) in fields[1..].iter().enumerate() {
            v[c] = f
                .trim()
                .parse::<f64>()
                .ok()
                .filter(|x| x.is_finite())
                .ok_or_else(|| parse_err(line_no, c + 2, format!("`{f}` is not a finite number")))?;
        }
        let label = fields[0].trim();
        if label == "offset" {
            offset = Vector6::from(v);
            continue;
        }
        let axis: crate::Axis = label.parse().map_err(|_| parse_err(line_no, 1, format!("unknown row label `{label}`")))?;
        if seen[axis.index()] {
            return Err(parse_err(line_no, 1, format!("duplicate row `{label}`")));
        }
        seen[axis.index()] = true;
        for (c, x) in v.iter().enumerate() {
            matrix[(axis.index(), c)] = *x;
        }
    }
    if let Some(missing) = seen.iter().position(|s| !s) {
        return Err(PipelineError::Invalid(format!("calibration matrix has no `{}` row", AXES[missing])));
    }
    let mut c = CalibrationMatrix::new(matrix, offset, representation, method);
    c.diagnostics.slack = slack;
    Ok(c)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::calib::fixtures::published_constrained;

    fn sample_data() -> Dataset {
        let frames = [[0.1, 0.2, 0.30000000000000004, 1.0 / 3.0, 2.5e-17, 3.2999]; 3];
        let w = [Wrench::new(1.5, -2.0, 1e10, 0.1, -0.2, 1.0 / 7.0); 3];
        Dataset::from_arrays(&frames, &w, Representation::Volts, 1000.0).unwrap()
    }

    #[test]
    fn text_round_trip_is_exact() {
        let data = sample_data();
        let back = parse_dataset(&write_dataset(&data)).unwrap();
        assert_eq!(back.samples(), data.samples());
        assert_eq!(back.sample_rate, 1000.0);
    }

    #[test]
    fn swapped_header_is_rejected() {
        let text = write_dataset(&sample_data()).replacen("s1,s2", "s2,s1", 1);
        assert!(matches!(parse_dataset(&text), Err(PipelineError::HeaderMismatch { .. })));
    }

    #[test]
    fn bad_field_is_located() {
        let mut text = String::from(DATASET_HEADER);
        text.push_str("\n0,1,1,1,1,1,1,0,0,0,0,0,0\n0.1,1,1,x,1,1,1,0,0,0,0,0,0\n");
        match parse_dataset(&text) {
            Err(PipelineError::Parse { line, column, .. }) => assert_eq!((line, column), (3, 4)),
            other => panic!("{other:?}"),
        }
        let short = format!("{DATASET_HEADER}\n0,1,1\n");
        assert!(matches!(parse_dataset(&short), Err(PipelineError::Parse { line: 2, column: 4, .. })));
    }

    #[test]
    fn counts_are_inferred() {
        let frames = [[30000.0, 1.0, 2.0, 3.0, 4.0, 5.0], [30001.0, 1.0, 2.0, 3.0, 4.0, 5.0]];
        let w = [Wrench::ZERO; 2];
        let data = Dataset::from_arrays(&frames, &w, Representation::Counts, 10.0).unwrap();
        let back = parse_dataset(&write_dataset(&data)).unwrap();
        assert_eq!(back.representation(), Some(Representation::Counts));
        assert!((back.sample_rate - 10.0).abs() < 1e-12);
    }

    #[test]
    fn matrix_round_trip() {
        let mut c = CalibrationMatrix::new(
            published_constrained(),
            Vector6::new(1.0, 2.0, 3.0, 4.0, 5.0, 1.0 / 3.0),
            Representation::Counts,
            LinearMethod::ConstrainedQp,
        );
        c.diagnostics.slack = Some(20.0);
        let back = parse_calibration_matrix(&write_calibration_matrix(&c)).unwrap();
        assert_eq!(back.matrix, c.matrix);
        assert_eq!(back.offset, c.offset);
        assert_eq!(back.representation, Representation::Counts);
        assert_eq!(back.method, LinearMethod::ConstrainedQp);
        assert_eq!(back.diagnostics.slack, Some(20.0));
    }

    #[test]
    fn matrix_missing_row_is_rejected() {
        let text = write_calibration_matrix(&CalibrationMatrix::external(Matrix6::identity(), Representation::Volts));
        let cut: String = text.lines().filter(|l| !l.starts_with("mz")).map(|l| format!("{l}\n")).collect();
        assert!(matches!(parse_calibration_matrix(&cut), Err(PipelineError::Invalid(_))));
    }
}
