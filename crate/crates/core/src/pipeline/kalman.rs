use crate::Dataset;

/// Scalar random-walk Kalman filter parameters, in squared channel units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KalmanParams {
    /// Process variance per step.
    pub q: f64,
    /// Measurement variance.
    pub r: f64,
    /// Initial state; `None` starts from the first measurement.
    pub x0: Option<f64>,
    /// Initial state variance.
    pub p0: f64,
}

impl Default for KalmanParams {
    fn default() -> Self {
        KalmanParams { q: 1e-8, r: 1.54e-5, x0: None, p0: 1.54e-5 }
    }
}

impl KalmanParams {
    pub fn new(q: f64, r: f64) -> Result<KalmanParams, String> {
        let p = KalmanParams { q, r, ..KalmanParams::default() };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), String> {
        if !(self.q.is_finite() && self.q >= 0.0) {
            return Err(format!("process variance q = {} must be >= 0", self.q));
        }
        if !(self.r.is_finite() && self.r > 0.0) {
            return Err(format!("measurement variance r = {} must be > 0", self.r));
        }
        if !(self.p0.is_finite() && self.p0 >= 0.0) {
            return Err(format!("initial variance p0 = {} must be >= 0", self.p0));
        }
        if self.x0.is_some_and(|x| !x.is_finite()) {
            return Err("initial state must be finite".into());
        }
        Ok(())
    }
}

/// Filters one channel. Each output depends only on the inputs up to and
/// including its own index.
pub fn kalman_filter(series: &[f64], params: &KalmanParams) -> Vec<f64> {
    let mut out = Vec::with_capacity(series.len());
    let Some(&first) = series.first() else {
        return out;
    };
    let mut x = params.x0.unwrap_or(first);
    let mut p = params.p0;
    for &z in series {
        p += params.q;
        let k = p / (p + params.r);
        x += k * (z - x);
        p *= 1.0 - k;
        out.push(x);
    }
    out
}

/// Applies [`kalman_filter`] to each of the six channels independently.
pub fn kalman_filter_dataset(data: &Dataset, params: &KalmanParams) -> Dataset {
    data.map_channels(|_, s| kalman_filter(s, params))
}
