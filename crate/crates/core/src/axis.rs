use std::fmt;
use std::str::FromStr;

/// One of the six wrench components.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Axis {
    Fx,
    Fy,
    Fz,
    Mx,
    My,
    Mz,
}

/// All axes in canonical order (Fx, Fy, Fz, Mx, My, Mz).
pub const AXES: [Axis; 6] = [Axis::Fx, Axis::Fy, Axis::Fz, Axis::Mx, Axis::My, Axis::Mz];

impl Axis {
    pub const fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(index: usize) -> Option<Axis> {
        AXES.get(index).copied()
    }

    pub const fn name(self) -> &'static str {
        match self {
            Axis::Fx => "fx",
            Axis::Fy => "fy",
            Axis::Fz => "fz",
            Axis::Mx => "mx",
            Axis::My => "my",
            Axis::Mz => "mz",
        }
    }

    pub const fn is_force(self) -> bool {
        matches!(self, Axis::Fx | Axis::Fy | Axis::Fz)
    }

    /// Unit of the axis value: newtons for forces, newton-meters for moments.
    pub const fn unit(self) -> &'static str {
        if self.is_force() {
            "N"
        } else {
            "N*m"
        }
    }
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown axis `{0}` (expected one of fx, fy, fz, mx, my, mz)")]
pub struct UnknownAxis(pub String);

impl FromStr for Axis {
    type Err = UnknownAxis;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "fx" => Ok(Axis::Fx),
            "fy" => Ok(Axis::Fy),
            "fz" => Ok(Axis::Fz),
            "mx" => Ok(Axis::Mx),
            "my" => Ok(Axis::My),
            "mz" => Ok(Axis::Mz),
            _ => Err(UnknownAxis(s.to_string())),
        }
    }
}
