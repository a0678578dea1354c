//! Monthly platform metrics and their counterfactual forecasts.

mod aggregate;
pub mod ets;
mod forecast;
pub mod stl;

pub use aggregate::{aggregate_all, aggregate_monthly, Metric, MonthlySeries};
pub use ets::{ets_forecast, holt_fit, EtsForecast, HoltFit};
pub use forecast::{forecast_with_intervals, gap_report_at, overall_effect, z_value, Forecast, GapFlag, GapRow, IntervalBand};
pub use stl::{stl_decompose, Decomposition, SeasonalWindow, StlParams};

use crate::calendar::YearMonth;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum TimeSeriesError {
    #[error("empty month range {first}..{last}")]
    EmptyRange { first: YearMonth, last: YearMonth },
    #[error("series too short: need {needed}, got {got}")]
    TooShort { needed: usize, got: usize },
    #[error("series contains non-finite values")]
    NonFinite,
    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("forecast has no {0}% band")]
    MissingBand(u32),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}
