use super::{AxisRanges, EvalError};
use crate::model::Wrench;

/// Per-axis percentage error statistics.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct FseStats {
    pub mean: f64,
    pub std: f64,
    pub max: f64,
}

fn check_lengths(pred: &[Wrench], reference: &[Wrench]) -> Result<(), EvalError> {
    if pred.len() != reference.len() {
        return Err(EvalError::LengthMismatch { pred: pred.len(), reference: reference.len() });
    }
    if pred.is_empty() {
        return Err(EvalError::Empty);
    }
    Ok(())
}

/// `|pred - ref| / range * 100` per sample and axis, aggregated per axis.
pub fn full_scale_error(pred: &[Wrench], reference: &[Wrench], ranges: &AxisRanges) -> Result<[FseStats; 6], EvalError> {
    check_lengths(pred, reference)?;
    let n = pred.len() as f64;
    Ok(std::array::from_fn(|a| {
        let errs: Vec<f64> = pred
            .iter()
            .zip(reference)
            .map(|(p, r)| (p.to_array()[a] - r.to_array()[a]).abs() / ranges.0[a] * 100.0)
            .collect();
        let mean = errs.iter().sum::<f64>() / n;
        let var = errs.iter().map(|e| (e - mean) * (e - mean)).sum::<f64>() / n;
        let max = errs.iter().fold(0.0f64, |acc, e| acc.max(*e));
        FseStats { mean, std: var.sqrt(), max }
    }))
}

/// Root-mean-square error per axis in output units.
pub fn rmse(pred: &[Wrench], reference: &[Wrench]) -> Result<[f64; 6], EvalError> {
    check_lengths(pred, reference)?;
    let n = pred.len() as f64;
    Ok(std::array::from_fn(|a| {
        let ss: f64 = pred
            .iter()
            .zip(reference)
            .map(|(p, r)| {
                let d = p.to_array()[a] - r.to_array()[a];
                d * d
            })
            .sum();
        (ss / n).sqrt()
    }))
}

/// Largest deviation of `pred` from its least-squares line against
/// `reference`, in percent of `range`. `reference` must be a monotone sweep
/// of at least 10 points.
pub fn nonlinearity(pred: &[f64], reference: &[f64], range: f64) -> Result<f64, EvalError> {
    if pred.len() != reference.len() {
        return Err(EvalError::LengthMismatch { pred: pred.len(), reference: reference.len() });
    }
    if reference.len() < 10 {
        return Err(EvalError::InsufficientSweep { points: reference.len() });
    }
    let rising = reference.windows(2).all(|w| w[1] > w[0]);
    let falling = reference.windows(2).all(|w| w[1] < w[0]);
    if !rising && !falling {
        return Err(EvalError::NotMonotone);
    }
    let n = reference.len() as f64;
    let mx = reference.iter().sum::<f64>() / n;
    let my = pred.iter().sum::<f64>() / n;
    let sxx: f64 = reference.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = reference.iter().zip(pred).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let worst = reference
        .iter()
        .zip(pred)
        .map(|(x, y)| (y - (my + slope * (x - mx))).abs())
        .fold(0.0f64, f64::max);
    Ok(worst / range * 100.0)
}
