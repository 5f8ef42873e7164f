use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::TimeSeries;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FitError {
    #[error("non-positive sample {value} at t = {t}")]
    NonPositiveSamples { t: f64, value: f64 },
    #[error("window holds {0} samples, need at least 5")]
    WindowTooSmall(usize),
    #[error("unknown series field {0:?}")]
    UnknownField(String),
}

/// `y ≈ exp(intercept − rate·t)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExpFit {
    pub rate: f64,
    pub intercept: f64,
    pub r2: f64,
}

/// Least-squares line through `(t, ln y)`. `R² = 1` when `ln y` is exactly
/// constant.
pub fn fit_exponential(t: &[f64], y: &[f64]) -> Result<ExpFit, FitError> {
    assert_eq!(t.len(), y.len());
    if t.len() < 5 {
        return Err(FitError::WindowTooSmall(t.len()));
    }
    if let Some((ti, yi)) = t.iter().zip(y).find(|(_, v)| !(**v > 0.0)) {
        return Err(FitError::NonPositiveSamples { t: *ti, value: *yi });
    }
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let m = t.len() as f64;
    let tm = t.iter().sum::<f64>() / m;
    let lm = ly.iter().sum::<f64>() / m;
    let stt: f64 = t.iter().map(|x| (x - tm).powi(2)).sum();
    let stl: f64 = t.iter().zip(&ly).map(|(x, l)| (x - tm) * (l - lm)).sum();
    let slope = if stt > 0.0 { stl / stt } else { 0.0 };
    let intercept = lm - slope * tm;
    let ss_tot: f64 = ly.iter().map(|l| (l - lm).powi(2)).sum();
    let ss_res: f64 = t
        .iter()
        .zip(&ly)
        .map(|(x, l)| (l - intercept - slope * x).powi(2))
        .sum();
    let r2 = if ss_tot > 0.0 { 1.0 - ss_res / ss_tot } else { 1.0 };
    Ok(ExpFit {
        rate: -slope,
        intercept,
        r2,
    })
}

/// `[0.2·T, 0.8·T]` for a series ending at `T`.
pub fn default_window(series: &TimeSeries) -> (f64, f64) {
    let t_end = series.records.last().map_or(0.0, |r| r.t);
    (0.2 * t_end, 0.8 * t_end)
}

/// Fits the named column over the snapshots with `t0 ≤ t ≤ t1`.
pub fn fit_exponential_rate(
    series: &TimeSeries,
    field: &str,
    window: (f64, f64),
) -> Result<ExpFit, FitError> {
    let mut t = Vec::new();
    let mut y = Vec::new();
    for r in &series.records {
        if r.t >= window.0 && r.t <= window.1 {
            t.push(r.t);
            y.push(
                r.field(field)
                    .ok_or_else(|| FitError::UnknownField(field.to_string()))?,
            );
        }
    }
    fit_exponential(&t, &y)
}
