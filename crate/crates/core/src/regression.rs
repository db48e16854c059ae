//! Ordinary least squares for exponent fits.

use serde::Serialize;
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{LabError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    /// Two-sided 95% confidence interval for the slope; unbounded with fewer
    /// than three points.
    pub slope_ci95: (f64, f64),
    pub r_squared: f64,
    pub points: usize,
}

/// Least-squares line `y = slope * x + intercept`.
pub fn ols(x: &[f64], y: &[f64]) -> Result<LinearFit> {
    if x.len() != y.len() {
        return Err(LabError::Degenerate(format!(
            "{} abscissas vs {} ordinates",
            x.len(),
            y.len()
        )));
    }
    let n = x.len();
    if n < 2 {
        return Err(LabError::Degenerate(format!("{n} points")));
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(LabError::Degenerate("non-finite input".into()));
    }
    let nf = n as f64;
    let mx = x.iter().sum::<f64>() / nf;
    let my = y.iter().sum::<f64>() / nf;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    if sxx <= f64::EPSILON * x.iter().map(|v| v * v).sum::<f64>().max(1e-300) {
        return Err(LabError::Degenerate("abscissas do not vary".into()));
    }
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse: f64 = x
        .iter()
        .zip(y)
        .map(|(a, b)| (b - intercept - slope * a).powi(2))
        .sum();
    let syy: f64 = y.iter().map(|v| (v - my).powi(2)).sum();
    let r_squared = if syy > 0.0 { 1.0 - sse / syy } else { 1.0 };
    let slope_ci95 = if n > 2 {
        let dof = nf - 2.0;
        let se = (sse / dof / sxx).sqrt();
        let t = StudentsT::new(0.0, 1.0, dof)
            .expect("positive degrees of freedom")
            .inverse_cdf(0.975);
        (slope - t * se, slope + t * se)
    } else {
        (f64::NEG_INFINITY, f64::INFINITY)
    };
    Ok(LinearFit {
        slope,
        intercept,
        slope_ci95,
        r_squared,
        points: n,
    })
}

/// Slope of `ln y` against `ln x`.
pub fn loglog_fit(x: &[f64], y: &[f64]) -> Result<LinearFit> {
    if x.iter().chain(y).any(|v| !(*v > 0.0)) {
        return Err(LabError::Degenerate(
            "log-log fit needs positive data".into(),
        ));
    }
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    ols(&lx, &ly)
}

/// Slope of `ln(value)` against `ln(ln n)`; needs at least four points with
/// `n > 1` and positive values.
pub fn fit_exponent(curve: &[(f64, f64)]) -> Result<LinearFit> {
    if curve.len() < 4 {
        return Err(LabError::Degenerate(format!(
            "{} points, need 4",
            curve.len()
        )));
    }
    if curve.iter().any(|(n, v)| !(*n > 1.0) || !(*v > 0.0)) {
        return Err(LabError::Degenerate(
            "need n > 1 and positive values".into(),
        ));
    }
    let x: Vec<f64> = curve.iter().map(|(n, _)| n.ln().ln()).collect();
    let y: Vec<f64> = curve.iter().map(|(_, v)| v.ln()).collect();
    ols(&x, &y)
}
