//! Holt linear-trend exponential smoothing with additive errors.
//!
//! State update for smoothing parameters `alpha` and `beta` (trend smoothing
//! expressed as a fraction of `alpha`):
//!
//! ```text
//! yhat_t  = level + slope
//! e_t     = y_t - yhat_t
//! level' = level + slope + alpha * e_t
//! slope' = slope + alpha * beta * e_t
//! ```
//!
//! `(alpha, beta)` minimise the in-sample one-step SSE over the grid
//! `alpha in {0.01, 0.02, ..., 1.00}`, `beta in {0.00, 0.01, ..., 1.00}`;
//! the first minimiser in grid order wins. Initial level and slope come from a
//! least-squares line through the first ten observations.

use serde::{Deserialize, Serialize};

use super::TimeSeriesError;

pub const MIN_LENGTH: usize = 10;
const INIT_WINDOW: usize = 10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HoltFit {
    pub alpha: f64,
    pub beta: f64,
    pub initial_level: f64,
    pub initial_slope: f64,
    /// Final level and slope after filtering the whole series.
    pub level: f64,
    pub slope: f64,
    pub sse: f64,
    /// Residual variance, `sse / (n - 4)` (two smoothing parameters, two initial states).
    pub sigma2: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EtsForecast {
    pub point: Vec<f64>,
    /// Forecast-error variance per horizon step.
    pub sigma2: Vec<f64>,
    /// `None` for a degenerate (constant) input.
    pub fit: Option<HoltFit>,
}

fn initial_state(y: &[f64]) -> (f64, f64) {
    let m = y.len().min(INIT_WINDOW);
    // regress y on t = 1..m; level is the intercept at t = 0
    let tbar = (m as f64 + 1.0) / 2.0;
    let ybar = y[..m].iter().sum::<f64>() / m as f64;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for (i, v) in y[..m].iter().enumerate() {
        let dt = (i + 1) as f64 - tbar;
        sxx += dt * dt;
        sxy += dt * (v - ybar);
    }
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    (ybar - slope * tbar, slope)
}

/// One-step filter: returns `(sse, final level, final slope)`.
pub fn holt_filter(y: &[f64], alpha: f64, beta: f64, level0: f64, slope0: f64) -> (f64, f64, f64) {
    let mut level = level0;
    let mut slope = slope0;
    let mut sse = 0.0;
    for &obs in y {
        let e = obs - (level + slope);
        sse += e * e;
        level += slope + alpha * e;
        slope += alpha * beta * e;
    }
    (sse, level, slope)
}

fn is_constant(y: &[f64]) -> bool {
    let first = y[0];
    y.iter().all(|&v| v == first)
}

/// Fits `(alpha, beta)` on the grid.
pub fn holt_fit(y: &[f64]) -> Result<HoltFit, TimeSeriesError> {
    if y.len() < MIN_LENGTH {
        return Err(TimeSeriesError::TooShort { needed: MIN_LENGTH, got: y.len() });
    }
    if y.iter().any(|v| !v.is_finite()) {
        return Err(TimeSeriesError::NonFinite);
    }
    let (l0, b0) = initial_state(y);
    let mut best: Option<(f64, f64, f64)> = None;
    for ai in 1..=100 {
        let alpha = ai as f64 / 100.0;
        for bi in 0..=100 {
            let beta = bi as f64 / 100.0;
            let (sse, _, _) = holt_filter(y, alpha, beta, l0, b0);
            if best.map_or(true, |(s, _, _)| sse < s) {
                best = Some((sse, alpha, beta));
            }
        }
    }
    let (sse, alpha, beta) = best.expect("grid is non-empty");
    let (_, level, slope) = holt_filter(y, alpha, beta, l0, b0);
    let dof = (y.len() - 4).max(1) as f64;
    Ok(HoltFit { alpha, beta, initial_level: l0, initial_slope: b0, level, slope, sse, sigma2: sse / dof })
}

/// Point forecasts and per-step error variances:
/// `Var(h) = sigma2 * (1 + sum_{j=1}^{h-1} (alpha * (1 + beta * j))^2)`.
pub fn ets_forecast(y: &[f64], horizon: usize) -> Result<EtsForecast, TimeSeriesError> {
    if y.len() < MIN_LENGTH {
        return Err(TimeSeriesError::TooShort { needed: MIN_LENGTH, got: y.len() });
    }
    if is_constant(y) {
        return Ok(EtsForecast { point: vec![y[0]; horizon], sigma2: vec![0.0; horizon], fit: None });
    }
    let fit = holt_fit(y)?;
    let mut point = Vec::with_capacity(horizon);
    let mut sigma2 = Vec::with_capacity(horizon);
    let mut acc = 1.0;
    for h in 1..=horizon {
        point.push(fit.level + h as f64 * fit.slope);
        if h > 1 {
            let c = fit.alpha * (1.0 + fit.beta * (h - 1) as f64);
            acc += c * c;
        }
        sigma2.push(fit.sigma2 * acc);
    }
    Ok(EtsForecast { point, sigma2, fit: Some(fit) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand_distr::{Distribution, Normal};

    #[test]
    fn exact_linear_trend() {
        let y: Vec<f64> = (1..=60).map(f64::from).collect();
        let f = ets_forecast(&y, 12).unwrap();
        for (h, p) in f.point.iter().enumerate() {
            assert!((p - (61 + h) as f64).abs() < 1e-3);
        }
    }

    #[test]
    fn constant_input_is_flat_with_zero_variance() {
        let f = ets_forecast(&[3.5; 24], 6).unwrap();
        assert_eq!(f.point, vec![3.5; 6]);
        assert_eq!(f.sigma2, vec![0.0; 6]);
        assert!(f.fit.is_none());
    }

    #[test]
    fn beats_naive_on_noisy_trend() {
        let mut rng = crate::seed::rng(11);
        let noise = Normal::new(0.0, 2.0).unwrap();
        let y: Vec<f64> = (0..60).map(|t| 20.0 + 0.8 * t as f64 + noise.sample(&mut rng)).collect();
        let fit = holt_fit(&y).unwrap();
        let naive: f64 = y.windows(2).map(|w| (w[1] - w[0]).powi(2)).sum();
        assert!(fit.sse <= naive, "holt {} vs naive {}", fit.sse, naive);
    }

    #[test]
    fn variance_grows_with_horizon() {
        let y: Vec<f64> = (0..40).map(|t| t as f64 + if t % 3 == 0 { 1.0 } else { -0.5 }).collect();
        let f = ets_forecast(&y, 12).unwrap();
        assert!(f.sigma2.windows(2).all(|w| w[1] >= w[0]));
        assert!(f.sigma2[0] > 0.0);
    }

    #[test]
    fn too_short() {
        assert!(ets_forecast(&[1.0; 9], 3).is_err());
    }
}
