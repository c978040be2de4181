use super::ModelError;

/// Upper rail of the ADC input range.
pub const ADC_FULL_SCALE_VOLTS: f64 = 3.3;
/// Largest code of the 16-bit converter.
pub const ADC_MAX_COUNT: u16 = u16::MAX;
pub const COUNTS_PER_VOLT: f64 = ADC_MAX_COUNT as f64 / ADC_FULL_SCALE_VOLTS;

/// Distance-to-voltage response of one photoreflector, modeled as linear
/// about an operating point inside a bounded band, with an optional cubic
/// term. Outside the band the output holds the band-edge value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhotocouplerCurve {
    /// Screen distance at the center of the linear band (mm).
    pub operating_point: f64,
    /// Slope at the operating point (V/mm). May be negative.
    pub gain: f64,
    /// Output at the operating point (V).
    pub bias: f64,
    /// Linear band `[low, high]` in mm.
    pub linear_range: (f64, f64),
    /// Gaussian read-noise standard deviation (V).
    pub noise_std: f64,
    /// Cubic coefficient (V/mm^3) applied to the offset from the operating point.
    pub cubic: f64,
}

impl Default for PhotocouplerCurve {
    fn default() -> Self {
        PhotocouplerCurve {
            operating_point: 0.2,
            gain: -5.0,
            bias: 1.65,
            linear_range: (0.0, 0.4),
            noise_std: 3.92e-2,
            cubic: 0.0,
        }
    }
}

impl PhotocouplerCurve {
    pub fn noiseless(self) -> Self {
        PhotocouplerCurve { noise_std: 0.0, ..self }
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let fields = [
            self.operating_point,
            self.gain,
            self.bias,
            self.linear_range.0,
            self.linear_range.1,
            self.noise_std,
            self.cubic,
        ];
        if fields.iter().any(|v| !v.is_finite()) {
            return Err(ModelError::NonFinite("photocoupler curve".into()));
        }
        let (low, high) = self.linear_range;
        if low >= high {
            return Err(ModelError::InvalidCurve(format!(
                "linear range low {low} must be below high {high}"
            )));
        }
        if self.noise_std < 0.0 {
            return Err(ModelError::InvalidCurve(format!("negative noise std {}", self.noise_std)));
        }
        if !(low..=high).contains(&self.operating_point) {
            return Err(ModelError::InvalidCurve(format!(
                "operating point {} outside linear range [{low}, {high}]",
                self.operating_point
            )));
        }
        Ok(())
    }

    fn response(&self, distance: f64) -> f64 {
        let u = distance - self.operating_point;
        self.bias + self.gain * u + self.cubic * u * u * u
    }

    /// Noise-free voltage at screen distance `distance` (mm) and whether the
    /// distance left the linear band.
    pub fn voltage(&self, distance: f64) -> (f64, bool) {
        let (low, high) = self.linear_range;
        if distance > high {
            (self.response(high), true)
        } else if distance < low {
            (self.response(low), true)
        } else {
            (self.response(distance), false)
        }
    }
}

/// 16-bit conversion over 0..3.3 V, rounding half away from zero.
pub fn quantize(volts: f64) -> u16 {
    let v = volts.clamp(0.0, ADC_FULL_SCALE_VOLTS);
    (v / ADC_FULL_SCALE_VOLTS * ADC_MAX_COUNT as f64).round() as u16
}
