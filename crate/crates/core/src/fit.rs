//! Exponent fits for growth series.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MIN_POINTS: usize = 5;
/// Default `|slope|` threshold for a bounded verdict.
pub const BOUNDED_SLOPE: f64 = 0.02;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Model {
    /// `value ≈ C m^γ`.
    Power,
    /// `value ≈ C (log m)^γ`.
    LogPower,
    RatioLimit,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub model: Model,
    pub gamma: f64,
    pub intercept: f64,
    pub r2: f64,
    pub range: (f64, f64),
    pub points_used: usize,
    /// `(m, value(m²)/value(m))` for log-power fits.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub doubling: Vec<(f64, f64)>,
}

impl FitReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("fit reports serialize")
    }
}

/// Least squares `y ≈ a + b x`; returns `(b, a, R²)`.
pub fn least_squares(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx) * (v - mx)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let syy: f64 = y.iter().map(|v| (v - my) * (v - my)).sum();
    let b = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let a = my - b * mx;
    // Relative to the data scale, residual variance below rounding counts as a perfect fit.
    let scale = y.iter().map(|v| v * v).sum::<f64>().max(1.0);
    let r2 = if syy <= 1e-24 * scale {
        1.0
    } else {
        let ss_res: f64 = x.iter().zip(y).map(|(xi, yi)| (yi - a - b * xi).powi(2)).sum();
        (1.0 - ss_res / syy).clamp(0.0, 1.0)
    };
    (b, a, r2)
}

fn validate(points: &[(f64, f64)], min_m: f64) -> Result<()> {
    if points.len() < MIN_POINTS {
        return Err(Error::InsufficientData { needed: MIN_POINTS, found: points.len() });
    }
    if let Some(p) = points.iter().find(|p| !(p.1 > 0.0 && p.1.is_finite()) || !(p.0 >= min_m)) {
        return Err(Error::InvalidParameter(format!("point {p:?} outside the fit domain")));
    }
    Ok(())
}

fn range(points: &[(f64, f64)]) -> (f64, f64) {
    (points.iter().map(|p| p.0).fold(f64::INFINITY, f64::min), points.iter().map(|p| p.0).fold(0.0, f64::max))
}

/// Fit of `log value` against `log m`.
pub fn fit_power(points: &[(f64, f64)]) -> Result<FitReport> {
    validate(points, f64::MIN_POSITIVE)?;
    let x: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let y: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let (gamma, intercept, r2) = least_squares(&x, &y);
    Ok(FitReport { model: Model::Power, gamma, intercept, r2, range: range(points), points_used: points.len(), doubling: vec![] })
}

/// Fit of `log value` against `log log m`, with the doubling diagnostic `value(m²)/value(m) → 2^γ`.
pub fn fit_log_power(points: &[(f64, f64)]) -> Result<FitReport> {
    validate(points, 3.0)?;
    let x: Vec<f64> = points.iter().map(|p| p.0.ln().ln()).collect();
    let y: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let (gamma, intercept, r2) = least_squares(&x, &y);
    Ok(FitReport { model: Model::LogPower, gamma, intercept, r2, range: range(points), points_used: points.len(), doubling: doubling_pairs(points) })
}

/// `(m, value(m²)/value(m))` for every `m` whose square is also sampled.
pub fn doubling_pairs(points: &[(f64, f64)]) -> Vec<(f64, f64)> {
    points
        .iter()
        .filter_map(|&(m, v)| points.iter().find(|q| q.0 == m * m).map(|q| (m, q.1 / v)))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Stabilization {
    /// Mean over the last third of the points.
    pub limit: f64,
    /// `max/min`.
    pub spread: f64,
    /// Fitted power exponent.
    pub slope: f64,
    pub bounded: bool,
}

pub fn ratio_stabilization(points: &[(f64, f64)], threshold: f64) -> Result<Stabilization> {
    validate(points, f64::MIN_POSITIVE)?;
    let fit = fit_power(points)?;
    let tail = &points[points.len() - points.len().div_ceil(3)..];
    let limit = tail.iter().map(|p| p.1).sum::<f64>() / tail.len() as f64;
    let mx = points.iter().map(|p| p.1).fold(0.0, f64::max);
    let mn = points.iter().map(|p| p.1).fold(f64::INFINITY, f64::min);
    Ok(Stabilization { limit, spread: mx / mn, slope: fit.gamma, bounded: fit.gamma.abs() < threshold })
}

/// `m = 2^lo, …, 2^hi`.
pub fn dyadic(lo: u32, hi: u32) -> Vec<usize> {
    (lo..=hi).map(|k| 1usize << k).collect()
}
