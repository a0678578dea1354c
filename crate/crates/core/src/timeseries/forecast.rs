use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use super::ets::ets_forecast;
use super::stl::{stl_decompose, SeasonalWindow, StlParams};
use super::{MonthlySeries, TimeSeriesError};
use crate::calendar::YearMonth;

/// Central prediction band at `level` percent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntervalBand {
    pub level: f64,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Forecast {
    /// First forecast month (the month after the series ends).
    pub start_month: YearMonth,
    pub point: Vec<f64>,
    /// Sorted by ascending level.
    pub bands: Vec<IntervalBand>,
}

impl Forecast {
    pub fn horizon(&self) -> usize {
        self.point.len()
    }

    pub fn band(&self, level: f64) -> Option<&IntervalBand> {
        self.bands.iter().find(|b| (b.level - level).abs() < 1e-9)
    }
}

pub fn z_value(level: f64) -> Result<f64, TimeSeriesError> {
    if !(level > 0.0 && level < 100.0) {
        return Err(TimeSeriesError::InvalidParameter(format!("interval level {level}")));
    }
    let normal = Normal::new(0.0, 1.0).expect("standard normal");
    Ok(normal.inverse_cdf(0.5 + level / 200.0))
}

/// STL, then Holt on the seasonally adjusted series, then the last fitted
/// seasonal cycle added back. Bands are Gaussian with the per-step variance.
///
/// With a periodic seasonal each cycle position is a mean over `K = n / period`
/// cycles, so the adjusted series keeps only `(K - 1) / K` of the noise and
/// the re-added seasonal carries `sigma2 / K` of its own. The Holt variance is
/// rescaled by `K / (K - 1)` and that term added at every step.
pub fn forecast_with_intervals(
    series: &MonthlySeries,
    horizon: usize,
    levels: &[f64],
    stl: &StlParams,
) -> Result<Forecast, TimeSeriesError> {
    let y = &series.values;
    let start_month = series.start_month.plus(y.len() as i64);
    let mut levels = levels.to_vec();
    levels.sort_by(f64::total_cmp);
    levels.dedup();
    let zs = levels.iter().map(|&l| z_value(l)).collect::<Result<Vec<_>, _>>()?;

    if !y.is_empty() && y.iter().all(|&v| v == y[0]) && y.len() >= 2 * stl.period {
        let point = vec![y[0]; horizon];
        let bands = levels.iter().map(|&level| IntervalBand { level, lower: point.clone(), upper: point.clone() }).collect();
        return Ok(Forecast { start_month, point, bands });
    }

    let decomposition = stl_decompose(y, stl)?;
    let adjusted = decomposition.seasonally_adjusted(y);
    let ets = ets_forecast(&adjusted, horizon)?;
    let n = y.len();
    let period = stl.period;
    let last_cycle = &decomposition.seasonal[n - period..];
    let point: Vec<f64> = (0..horizon).map(|h| ets.point[h] + last_cycle[h % period]).collect();
    let cycles = n as f64 / period as f64;
    let variance: Vec<f64> = match (stl.seasonal, &ets.fit) {
        (SeasonalWindow::Periodic, Some(fit)) if cycles > 1.0 => {
            let inflate = cycles / (cycles - 1.0);
            ets.sigma2.iter().map(|v| inflate * (v + fit.sigma2 / cycles)).collect()
        }
        _ => ets.sigma2.clone(),
    };
    let bands = levels
        .iter()
        .zip(&zs)
        .map(|(&level, &z)| {
            let half: Vec<f64> = variance.iter().map(|v| z * v.sqrt()).collect();
            IntervalBand {
                level,
                lower: point.iter().zip(&half).map(|(p, h)| p - h).collect(),
                upper: point.iter().zip(&half).map(|(p, h)| p + h).collect(),
            }
        })
        .collect();
    Ok(Forecast { start_month, point, bands })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GapFlag {
    Inside,
    /// Outside the 80% band but inside the 95% band.
    Outside80,
    Outside95,
}

impl GapFlag {
    pub fn as_str(self) -> &'static str {
        match self {
            GapFlag::Inside => "inside",
            GapFlag::Outside80 => "outside_80",
            GapFlag::Outside95 => "outside_95",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapRow {
    pub month: YearMonth,
    pub observed: f64,
    pub point: f64,
    pub lo80: f64,
    pub hi80: f64,
    pub lo95: f64,
    pub hi95: f64,
    /// observed - point
    pub gap: f64,
    pub flag: GapFlag,
}

/// Observed-minus-forecast gaps with band membership. `observed` must cover
/// exactly the forecast horizon.
pub fn overall_effect(observed: &[f64], forecast: &Forecast) -> Result<Vec<GapRow>, TimeSeriesError> {
    if observed.len() != forecast.horizon() {
        return Err(TimeSeriesError::LengthMismatch { expected: forecast.horizon(), got: observed.len() });
    }
    let b80 = forecast.band(80.0).ok_or(TimeSeriesError::MissingBand(80))?;
    let b95 = forecast.band(95.0).ok_or(TimeSeriesError::MissingBand(95))?;
    Ok(observed
        .iter()
        .enumerate()
        .map(|(i, &obs)| {
            let out = |b: &IntervalBand| obs < b.lower[i] || obs > b.upper[i];
            let flag = if out(b95) {
                GapFlag::Outside95
            } else if out(b80) {
                GapFlag::Outside80
            } else {
                GapFlag::Inside
            };
            GapRow {
                month: forecast.start_month.plus(i as i64),
                observed: obs,
                point: forecast.point[i],
                lo80: b80.lower[i],
                hi80: b80.upper[i],
                lo95: b95.lower[i],
                hi95: b95.upper[i],
                gap: obs - forecast.point[i],
                flag,
            }
        })
        .collect())
}

/// Forecast from the portion of `series` up to and including `boundary`, then
/// compare against the observed months that follow.
pub fn gap_report_at(
    series: &MonthlySeries,
    boundary: YearMonth,
    horizon: usize,
    stl: &StlParams,
) -> Result<(Forecast, Vec<GapRow>), TimeSeriesError> {
    let history = series.window(series.start_month, boundary);
    let forecast = forecast_with_intervals(&history, horizon, &[80.0, 95.0], stl)?;
    let after = series.window(boundary.plus(1), boundary.plus(horizon as i64));
    let rows = overall_effect(&after.values, &forecast)?;
    Ok((forecast, rows))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::timeseries::Metric;
    use std::f64::consts::PI;

    fn seasonal_trend(n: usize) -> Vec<f64> {
        (0..n).map(|i| 200.0 + 1.5 * i as f64 + 20.0 * (2.0 * PI * i as f64 / 12.0).sin()).collect()
    }

    fn series(values: Vec<f64>) -> MonthlySeries {
        MonthlySeries { metric: Metric::ActiveRepos, start_month: "2015-01".parse().unwrap(), values }
    }

    #[test]
    fn noiseless_seasonal_trend_mape() {
        let all = seasonal_trend(72);
        let f = forecast_with_intervals(&series(all[..60].to_vec()), 12, &[80.0, 95.0], &StlParams::default()).unwrap();
        let mape: f64 = (0..12).map(|h| ((f.point[h] - all[60 + h]) / all[60 + h]).abs()).sum::<f64>() / 12.0;
        assert!(mape < 0.01, "mape {mape}");
        assert_eq!(f.start_month.to_string(), "2020-01");
    }

    #[test]
    fn bands_nest_and_are_symmetric() {
        let mut v = seasonal_trend(60);
        for (i, x) in v.iter_mut().enumerate() {
            *x += ((i * 37) % 11) as f64 - 5.0;
        }
        let f = forecast_with_intervals(&series(v), 12, &[95.0, 80.0], &StlParams::default()).unwrap();
        let (b80, b95) = (f.band(80.0).unwrap(), f.band(95.0).unwrap());
        for h in 0..12 {
            assert!(b95.lower[h] < b80.lower[h] && b80.lower[h] <= f.point[h]);
            assert!(b95.upper[h] > b80.upper[h] && b80.upper[h] >= f.point[h]);
            assert!(((b95.upper[h] - f.point[h]) - (f.point[h] - b95.lower[h])).abs() < 1e-9);
        }
    }

    #[test]
    fn constant_series_is_exactly_flat() {
        let f = forecast_with_intervals(&series(vec![7.0; 60]), 12, &[80.0, 95.0], &StlParams::default()).unwrap();
        assert!(f.point.iter().all(|&p| p == 7.0));
        assert!(f.bands.iter().all(|b| b.lower == f.point && b.upper == f.point));
    }

    #[test]
    fn gap_identity_and_boundary() {
        let f = forecast_with_intervals(&series(seasonal_trend(60).iter().enumerate().map(|(i, v)| v + (i % 5) as f64).collect()), 12, &[80.0, 95.0], &StlParams::default()).unwrap();
        let rows = overall_effect(&f.point, &f).unwrap();
        assert!(rows.iter().all(|r| r.gap == 0.0 && r.flag == GapFlag::Inside));
        let b95 = f.band(95.0).unwrap();
        let mut obs = f.point.clone();
        obs[0] = b95.upper[0] + 1e-6;
        let rows = overall_effect(&obs, &f).unwrap();
        assert_eq!(rows[0].flag, GapFlag::Outside95);
        assert!(overall_effect(&obs[..5], &f).is_err());
    }

    #[test]
    fn level_shift_flagged() {
        // 72 months with small deterministic noise; -20% level shift from forecast month 3
        let mut v = seasonal_trend(72);
        for (i, x) in v.iter_mut().enumerate() {
            *x *= 1.0 + 0.004 * (((i * 7919) % 17) as f64 / 8.0 - 1.0);
        }
        for x in v.iter_mut().skip(62) {
            *x *= 0.8;
        }
        let s = series(v);
        let (_, rows) = gap_report_at(&s, "2019-12".parse().unwrap(), 12, &StlParams::default()).unwrap();
        assert!(rows[2..].iter().all(|r| r.gap <= 0.0));
        assert!(rows[3..].iter().all(|r| r.flag == GapFlag::Outside95));
    }

    #[test]
    fn z_values() {
        assert!((z_value(95.0).unwrap() - 1.959963984540054).abs() < 1e-9);
        assert!((z_value(80.0).unwrap() - 1.2815515655446004).abs() < 1e-9);
        assert!(z_value(100.0).is_err());
    }
}
