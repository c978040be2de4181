use std::fmt;

use nalgebra::Matrix6;

use super::fixtures::NOMINAL_SIGN_PATTERN;
use crate::Axis;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sign {
    Positive,
    Negative,
    /// Little or no response.
    Weak,
}

impl Sign {
    pub fn parse(s: &str) -> Option<Sign> {
        match s {
            "+" | "++" => Some(Sign::Positive),
            "-" | "--" => Some(Sign::Negative),
            "~" => Some(Sign::Weak),
            _ => None,
        }
    }

    pub const fn symbol(self) -> &'static str {
        match self {
            Sign::Positive => "+",
            Sign::Negative => "-",
            Sign::Weak => "~",
        }
    }
}

impl fmt::Display for Sign {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.symbol())
    }
}

/// Expected sign per calibration cell (rows: axes, columns: sensors) and the
/// fraction of the row's largest magnitude below which a cell counts as weak.
#[derive(Debug, Clone, PartialEq)]
pub struct SignPattern {
    pub cells: [[Sign; 6]; 6],
    pub theta: f64,
}

pub const DEFAULT_THETA: f64 = 0.3;

impl SignPattern {
    pub fn new(cells: [[Sign; 6]; 6], theta: f64) -> Result<SignPattern, String> {
        if !(theta > 0.0 && theta < 1.0) {
            return Err(format!("theta must lie in (0, 1), got {theta}"));
        }
        Ok(SignPattern { cells, theta })
    }

    /// Parses six rows of six whitespace-separated `+`, `-`, `~` tokens.
    pub fn parse(rows: &[&str], theta: f64) -> Result<SignPattern, String> {
        if rows.len() != 6 {
            return Err(format!("expected 6 pattern rows, got {}", rows.len()));
        }
        let mut cells = [[Sign::Weak; 6]; 6];
        for (r, line) in rows.iter().enumerate() {
            let tokens: Vec<&str> = line.split_whitespace().collect();
            if tokens.len() != 6 {
                return Err(format!("pattern row {} has {} cells", r + 1, tokens.len()));
            }
            for (c, t) in tokens.iter().enumerate() {
                cells[r][c] = Sign::parse(t).ok_or_else(|| format!("bad pattern cell {t:?} in row {}", r + 1))?;
            }
        }
        SignPattern::new(cells, theta)
    }

    /// The qualitative response table of the sensor with the default
    /// threshold.
    pub fn nominal() -> SignPattern {
        SignPattern::parse(&NOMINAL_SIGN_PATTERN, DEFAULT_THETA).expect("built-in pattern is valid")
    }

    pub fn with_theta(&self, theta: f64) -> Result<SignPattern, String> {
        SignPattern::new(self.cells, theta)
    }

    /// Sign class of every cell of `c`.
    pub fn classify(&self, c: &Matrix6<f64>) -> [[Sign; 6]; 6] {
        std::array::from_fn(|r| {
            let cut = self.theta * c.row(r).amax();
            std::array::from_fn(|k| {
                let v = c[(r, k)];
                if v.abs() < cut || v == 0.0 {
                    Sign::Weak
                } else if v > 0.0 {
                    Sign::Positive
                } else {
                    Sign::Negative
                }
            })
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ViolationKind {
    /// Expected a signed response, got the opposite sign.
    SignFlip,
    /// Expected a signed response, got one below the threshold.
    TooWeak,
    /// Expected little response, got one at or above the threshold.
    UnexpectedResponse,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SignViolation {
    pub axis: Axis,
    /// Sensor index, 0-based.
    pub sensor: usize,
    pub expected: Sign,
    pub found: Sign,
    pub value: f64,
    pub kind: ViolationKind,
}

impl fmt::Display for SignViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let kind = match self.kind {
            ViolationKind::SignFlip => "sign flip",
            ViolationKind::TooWeak => "too weak",
            ViolationKind::UnexpectedResponse => "unexpected response",
        };
        write!(
            f,
            "{} sensor {}: expected {}, found {} ({}): {kind}",
            self.axis,
            self.sensor + 1,
            self.expected,
            self.found,
            self.value
        )
    }
}

/// Cells of `c` that disagree with `pattern`, in row-major order.
pub fn check_sign_structure(c: &Matrix6<f64>, pattern: &SignPattern) -> Vec<SignViolation> {
    let classes = pattern.classify(c);
    let mut out = Vec::new();
    for (r, axis) in crate::AXES.iter().enumerate() {
        for k in 0..6 {
            let expected = pattern.cells[r][k];
            let found = classes[r][k];
            let value = c[(r, k)];
            let kind = match expected {
                Sign::Weak if found != Sign::Weak => Some(ViolationKind::UnexpectedResponse),
                Sign::Weak => None,
                Sign::Positive if value < 0.0 => Some(ViolationKind::SignFlip),
                Sign::Negative if value > 0.0 => Some(ViolationKind::SignFlip),
                _ if found == Sign::Weak => Some(ViolationKind::TooWeak),
                _ => None,
            };
            if let Some(kind) = kind {
                out.push(SignViolation { axis: *axis, sensor: k, expected, found, value, kind });
            }
        }
    }
    out
}
