//! Seasonal-trend decomposition by loess (additive).

use serde::{Deserialize, Serialize};

use super::TimeSeriesError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SeasonalWindow {
    /// Seasonal value = robustness-weighted mean of each cycle position.
    Periodic,
    /// Loess span (odd, >= 7) for the cycle-subseries smoother.
    Span(usize),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct StlParams {
    pub period: usize,
    pub seasonal: SeasonalWindow,
    /// Trend loess span; odd.
    pub trend_window: usize,
    /// Low-pass loess span; `None` means the next odd integer >= period.
    pub low_pass_window: Option<usize>,
    pub inner_iterations: usize,
    /// Number of robustness re-weighting passes after the initial fit.
    pub robust_iterations: usize,
}

impl Default for StlParams {
    fn default() -> Self {
        StlParams {
            period: 12,
            seasonal: SeasonalWindow::Periodic,
            trend_window: 23,
            low_pass_window: None,
            inner_iterations: 2,
            robust_iterations: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Decomposition {
    pub trend: Vec<f64>,
    pub seasonal: Vec<f64>,
    pub remainder: Vec<f64>,
    /// Final robustness weights (all ones when no robust pass ran).
    pub weights: Vec<f64>,
}

impl Decomposition {
    pub fn seasonally_adjusted(&self, series: &[f64]) -> Vec<f64> {
        series.iter().zip(&self.seasonal).map(|(y, s)| y - s).collect()
    }
}

fn next_odd(x: usize) -> usize {
    if x % 2 == 0 {
        x + 1
    } else {
        x
    }
}

fn tricube(u: f64) -> f64 {
    if u >= 1.0 {
        0.0
    } else {
        let t = 1.0 - u * u * u;
        t * t * t
    }
}

/// Local-linear loess of `y` (observed at positions `0..m`) evaluated at `x0`,
/// which may lie outside the data range for end extrapolation.
fn loess_at(y: &[f64], rw: &[f64], span: usize, x0: f64, degree: usize) -> f64 {
    let m = y.len();
    let q = span.max(2);
    let (lo, hi, h) = if q >= m {
        let far = x0.abs().max((x0 - (m - 1) as f64).abs());
        (0, m, far + ((q - m) / 2) as f64)
    } else {
        let centre = x0.round() as i64 - (q / 2) as i64;
        let lo = centre.clamp(0, (m - q) as i64) as usize;
        let far = (x0 - lo as f64).abs().max((x0 - (lo + q - 1) as f64).abs());
        (lo, lo + q, far)
    };
    let h = h.max(1e-12);
    let fit = |use_robust: bool| -> Option<f64> {
        let mut sw = 0.0;
        let mut sx = 0.0;
        let mut sy = 0.0;
        let mut ws = Vec::with_capacity(hi - lo);
        for j in lo..hi {
            let mut w = tricube((j as f64 - x0).abs() / h);
            if use_robust {
                w *= rw[j];
            }
            ws.push(w);
            sw += w;
            sx += w * j as f64;
            sy += w * y[j];
        }
        if sw <= 0.0 {
            return None;
        }
        let xbar = sx / sw;
        let ybar = sy / sw;
        if degree == 0 {
            return Some(ybar);
        }
        let mut sxx = 0.0;
        let mut sxy = 0.0;
        for (k, j) in (lo..hi).enumerate() {
            let dx = j as f64 - xbar;
            sxx += ws[k] * dx * dx;
            sxy += ws[k] * dx * (y[j] - ybar);
        }
        let range = (hi - lo) as f64;
        if sxx > 1e-6 * range * range * sw {
            Some(ybar + sxy / sxx * (x0 - xbar))
        } else {
            Some(ybar)
        }
    };
    fit(true).or_else(|| fit(false)).unwrap_or(0.0)
}

fn moving_average(x: &[f64], k: usize) -> Vec<f64> {
    if x.len() < k {
        return Vec::new();
    }
    let mut out = Vec::with_capacity(x.len() - k + 1);
    let mut sum: f64 = x[..k].iter().sum();
    out.push(sum / k as f64);
    for i in k..x.len() {
        sum += x[i] - x[i - k];
        out.push(sum / k as f64);
    }
    out
}

fn median_abs(x: &[f64]) -> f64 {
    let abs: Vec<f64> = x.iter().map(|v| v.abs()).collect();
    crate::stats::median(&abs).unwrap_or(0.0)
}

/// Cycle-subseries smoothing; returns a series of length `n + 2 * period`
/// covering one extra cycle on each side.
fn cycle_subseries(detrended: &[f64], rw: &[f64], params: &StlParams) -> Vec<f64> {
    let np = params.period;
    let n = detrended.len();
    let mut c = vec![0.0; n + 2 * np];
    for k in 0..np {
        let idx: Vec<usize> = (k..n).step_by(np).collect();
        let sub: Vec<f64> = idx.iter().map(|&i| detrended[i]).collect();
        let sub_w: Vec<f64> = idx.iter().map(|&i| rw[i]).collect();
        let m = sub.len();
        // values at subseries positions -1..=m
        let smoothed: Vec<f64> = match params.seasonal {
            SeasonalWindow::Periodic => {
                let sw: f64 = sub_w.iter().sum();
                let mean = if sw > 0.0 {
                    sub.iter().zip(&sub_w).map(|(v, w)| v * w).sum::<f64>() / sw
                } else {
                    sub.iter().sum::<f64>() / m as f64
                };
                vec![mean; m + 2]
            }
            SeasonalWindow::Span(ns) => (-1..=m as i64).map(|j| loess_at(&sub, &sub_w, ns, j as f64, 1)).collect(),
        };
        for (j, v) in smoothed.into_iter().enumerate() {
            // subseries position j-1 sits at series index k + (j-1)*np, shifted by np
            let pos = k + j * np;
            if pos < c.len() {
                c[pos] = v;
            }
        }
    }
    c
}

/// Additive STL. `trend + seasonal + remainder` reproduces the input.
pub fn stl_decompose(series: &[f64], params: &StlParams) -> Result<Decomposition, TimeSeriesError> {
    let n = series.len();
    let np = params.period;
    if np < 2 {
        return Err(TimeSeriesError::InvalidParameter(format!("period {np} < 2")));
    }
    if n < 2 * np {
        return Err(TimeSeriesError::TooShort { needed: 2 * np, got: n });
    }
    if series.iter().any(|v| !v.is_finite()) {
        return Err(TimeSeriesError::NonFinite);
    }
    let nl = params.low_pass_window.unwrap_or_else(|| next_odd(np));
    let nt = next_odd(params.trend_window.max(3));
    let unit = vec![1.0; n];

    let mut rw = vec![1.0; n];
    let mut trend = vec![0.0; n];
    let mut seasonal = vec![0.0; n];
    for pass in 0..=params.robust_iterations {
        for _ in 0..params.inner_iterations.max(1) {
            let detrended: Vec<f64> = series.iter().zip(&trend).map(|(y, t)| y - t).collect();
            let c = cycle_subseries(&detrended, &rw, params);
            let low = moving_average(&moving_average(&moving_average(&c, np), np), 3);
            let low: Vec<f64> = (0..n).map(|i| loess_at(&low, &unit, nl, i as f64, 1)).collect();
            for i in 0..n {
                seasonal[i] = c[np + i] - low[i];
            }
            let adjusted: Vec<f64> = series.iter().zip(&seasonal).map(|(y, s)| y - s).collect();
            trend = (0..n).map(|i| loess_at(&adjusted, &rw, nt, i as f64, 1)).collect();
        }
        if pass < params.robust_iterations {
            let resid: Vec<f64> = (0..n).map(|i| series[i] - trend[i] - seasonal[i]).collect();
            let h = 6.0 * median_abs(&resid);
            rw = resid
                .iter()
                .map(|r| {
                    if h <= 0.0 {
                        1.0
                    } else {
                        let u = (r.abs() / h).min(1.0);
                        let b = 1.0 - u * u;
                        b * b
                    }
                })
                .collect();
        }
    }
    let remainder = (0..n).map(|i| series[i] - trend[i] - seasonal[i]).collect();
    Ok(Decomposition { trend, seasonal, remainder, weights: rw })
}
