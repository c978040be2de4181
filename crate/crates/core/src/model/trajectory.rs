use std::f64::consts::PI;
use std::fmt::Write as _;

use super::{ModelError, Wrench};
use crate::{Axis, AXES};

/// Shapes of reference-load time series.
#[derive(Debug, Clone, PartialEq)]
pub enum TrajectoryKind {
    /// Linear ramp from zero to the axis amplitude on one axis.
    Ramp { axis: Axis },
    /// `amplitude * sin(2 pi f t)` on one axis.
    Sinusoid { axis: Axis, frequency_hz: f64 },
    /// Cycles through every presence/absence combination of the six axes.
    Mixed,
    /// Like [`Mixed`](TrajectoryKind::Mixed) but only over the listed axes;
    /// every other axis stays exactly zero.
    Degenerate { axes: Vec<Axis> },
}

impl TrajectoryKind {
    /// Parses `ramp:fx`, `sinusoid:fx:2.5`, `mixed`, `degenerate:fx,fy,mx`.
    pub fn parse(s: &str) -> Result<TrajectoryKind, ModelError> {
        let unknown = || ModelError::UnknownKind(s.to_string());
        let mut parts = s.trim().split(':');
        let head = parts.next().ok_or_else(unknown)?;
        let axis = |p: Option<&str>| -> Result<Axis, ModelError> {
            p.ok_or_else(unknown)?.parse::<Axis>().map_err(|_| unknown())
        };
        let kind = match head {
            "ramp" => TrajectoryKind::Ramp { axis: axis(parts.next())? },
            "sinusoid" => {
                let axis = axis(parts.next())?;
                let frequency_hz = match parts.next() {
                    Some(f) => f.parse::<f64>().map_err(|_| unknown())?,
                    None => 1.0,
                };
                TrajectoryKind::Sinusoid { axis, frequency_hz }
            }
            "mixed" => TrajectoryKind::Mixed,
            "degenerate" => {
                let list = parts.next().ok_or_else(unknown)?;
                let axes = list
                    .split(',')
                    .map(|a| a.parse::<Axis>().map_err(|_| unknown()))
                    .collect::<Result<Vec<_>, _>>()?;
                TrajectoryKind::Degenerate { axes }
            }
            _ => return Err(unknown()),
        };
        if parts.next().is_some() {
            return Err(unknown());
        }
        Ok(kind)
    }

    pub fn label(&self) -> String {
        match self {
            TrajectoryKind::Ramp { axis } => format!("ramp:{axis}"),
            TrajectoryKind::Sinusoid { axis, frequency_hz } => format!("sinusoid:{axis}:{frequency_hz}"),
            TrajectoryKind::Mixed => "mixed".to_string(),
            TrajectoryKind::Degenerate { axes } => {
                let mut s = "degenerate:".to_string();
                for (k, a) in axes.iter().enumerate() {
                    if k > 0 {
                        s.push(',');
                    }
                    let _ = write!(s, "{a}");
                }
                s
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub kind: TrajectoryKind,
    pub rate: f64,
    pub times: Vec<f64>,
    pub wrenches: Vec<Wrench>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }
}

fn excitation_frequency(axis: Axis) -> f64 {
    1.0 + 0.5 * axis.index() as f64
}

/// Presence/absence cycle over `axes`: segment `m` excites exactly the axes
/// whose bit is set in `m`, each at 20-100% of its amplitude with a sign that
/// alternates between segments.
fn combination_cycle(axes: &[Axis], times: &[f64], amplitudes: &Wrench) -> Vec<Wrench> {
    let combos = 1usize << axes.len();
    let n = times.len();
    times
        .iter()
        .enumerate()
        .map(|(k, &t)| {
            let mask = k * combos / n;
            let mut w = Wrench::ZERO;
            for (bit, &axis) in axes.iter().enumerate() {
                if mask >> bit & 1 == 1 {
                    let sign = if (mask.count_ones() as usize + axis.index()) % 2 == 0 { 1.0 } else { -1.0 };
                    let envelope = 0.6 + 0.4 * (2.0 * PI * excitation_frequency(axis) * t).sin();
                    w.set(axis, sign * envelope * amplitudes.get(axis));
                }
            }
            w
        })
        .collect()
}

/// Samples `round(duration * rate)` reference wrenches at `t = k / rate`.
pub fn generate_trajectory(
    kind: &TrajectoryKind,
    duration: f64,
    rate: f64,
    amplitudes: &Wrench,
) -> Result<Trajectory, ModelError> {
    if !(rate.is_finite() && rate > 0.0) {
        return Err(ModelError::InvalidTrajectory(format!("rate {rate} must be positive")));
    }
    if !(duration.is_finite() && duration > 0.0) {
        return Err(ModelError::InvalidTrajectory(format!("duration {duration} must be positive")));
    }
    if !amplitudes.is_finite() {
        return Err(ModelError::NonFinite("trajectory amplitudes".into()));
    }
    let n = (duration * rate).round() as usize;
    if n == 0 {
        return Err(ModelError::InvalidTrajectory("fewer than one sample".into()));
    }
    let times: Vec<f64> = (0..n).map(|k| k as f64 / rate).collect();
    let wrenches = match kind {
        TrajectoryKind::Ramp { axis } => (0..n)
            .map(|k| Wrench::single(*axis, amplitudes.get(*axis) * (k + 1) as f64 / n as f64))
            .collect(),
        TrajectoryKind::Sinusoid { axis, frequency_hz } => {
            if !(frequency_hz.is_finite() && *frequency_hz > 0.0) {
                return Err(ModelError::InvalidTrajectory(format!("frequency {frequency_hz}")));
            }
            times
                .iter()
                .map(|t| Wrench::single(*axis, amplitudes.get(*axis) * (2.0 * PI * frequency_hz * t).sin()))
                .collect()
        }
        TrajectoryKind::Mixed => {
            if n < 64 {
                return Err(ModelError::InvalidTrajectory(format!(
                    "mixed excitation needs at least 64 samples, got {n}"
                )));
            }
            combination_cycle(&AXES, &times, amplitudes)
        }
        TrajectoryKind::Degenerate { axes } => {
            if axes.is_empty() || axes.len() > 5 {
                return Err(ModelError::InvalidTrajectory(format!(
                    "degenerate excitation needs 1..=5 axes, got {}",
                    axes.len()
                )));
            }
            let mut sorted = axes.clone();
            sorted.sort();
            sorted.dedup();
            if sorted.len() != axes.len() {
                return Err(ModelError::InvalidTrajectory("repeated axis".into()));
            }
            if n < 1 << axes.len() {
                return Err(ModelError::InvalidTrajectory(format!(
                    "degenerate excitation over {} axes needs at least {} samples",
                    axes.len(),
                    1 << axes.len()
                )));
            }
            combination_cycle(axes, &times, amplitudes)
        }
    };
    Ok(Trajectory { kind: kind.clone(), rate, times, wrenches })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeSet;

    fn amps() -> Wrench {
        Wrench::new(100.0, 120.0, 180.0, 2.5, 2.5, 3.6)
    }

    #[test]
    fn ramp_ends_at_amplitude() {
        let t = generate_trajectory(&TrajectoryKind::Ramp { axis: Axis::Fx }, 1.0, 1000.0, &amps()).unwrap();
        assert_eq!(t.len(), 1000);
        assert_eq!(*t.wrenches.last().unwrap(), Wrench::single(Axis::Fx, 100.0));
        assert!(t.wrenches.iter().all(|w| w.fy == 0.0 && w.mz == 0.0));
    }

    #[test]
    fn degenerate_stays_in_subspace() {
        let kind = TrajectoryKind::Degenerate { axes: vec![Axis::Fz] };
        let t = generate_trajectory(&kind, 1.0, 100.0, &amps()).unwrap();
        assert!(t.wrenches.iter().all(|w| w.fx == 0.0 && w.fy == 0.0 && w.mx == 0.0 && w.my == 0.0 && w.mz == 0.0));
        assert!(t.wrenches.iter().any(|w| w.fz != 0.0));
    }

    #[test]
    fn mixed_covers_every_combination() {
        let t = generate_trajectory(&TrajectoryKind::Mixed, 6.4, 1000.0, &amps()).unwrap();
        let seen: BTreeSet<u8> = t
            .wrenches
            .iter()
            .map(|w| {
                w.to_array().iter().enumerate().fold(0u8, |m, (i, v)| if *v != 0.0 { m | 1 << i } else { m })
            })
            .collect();
        assert_eq!(seen.len(), 64);
    }

    #[test]
    fn invalid_inputs() {
        let k = TrajectoryKind::Mixed;
        assert!(generate_trajectory(&k, 0.0, 10.0, &amps()).is_err());
        assert!(generate_trajectory(&k, 1.0, -1.0, &amps()).is_err());
        assert!(generate_trajectory(&k, 1.0, 10.0, &amps()).is_err());
        let six = TrajectoryKind::Degenerate { axes: AXES.to_vec() };
        assert!(generate_trajectory(&six, 10.0, 100.0, &amps()).is_err());
    }

    #[test]
    fn kind_labels_parse_back() {
        for kind in [
            TrajectoryKind::Ramp { axis: Axis::My },
            TrajectoryKind::Sinusoid { axis: Axis::Fy, frequency_hz: 2.5 },
            TrajectoryKind::Mixed,
            TrajectoryKind::Degenerate { axes: vec![Axis::Fx, Axis::Mz] },
        ] {
            assert_eq!(TrajectoryKind::parse(&kind.label()).unwrap(), kind);
        }
        assert_eq!(TrajectoryKind::parse("spiral"), Err(ModelError::UnknownKind("spiral".into())));
        assert!(TrajectoryKind::parse("ramp:qq").is_err());
    }
}
