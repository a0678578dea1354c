//! R² / MSE evaluation and the seasonal-naive baseline.

use serde::{Deserialize, Serialize};

use super::model::Model;
use super::{check_xy, DesignMatrix, ModelError};

/// Modeled outcome, both in log1p space.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    /// ln(1 + monthly pushes).
    Productivity,
    /// ln(1 + monthly active members).
    TeamSize,
}

impl Outcome {
    pub const ALL: [Outcome; 2] = [Outcome::Productivity, Outcome::TeamSize];

    pub fn as_str(self) -> &'static str {
        match self {
            Outcome::Productivity => "productivity",
            Outcome::TeamSize => "team_size",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub model: String,
    pub outcome: Option<Outcome>,
    pub month: Option<u32>,
    pub n: usize,
    /// Missing when the test targets are constant.
    pub r2: Option<f64>,
    pub mse: f64,
}

/// R² against the test-set mean and MSE.
pub fn evaluate_predictions(tag: &str, y: &[f64], pred: &[f64]) -> Result<EvalReport, ModelError> {
    if y.len() != pred.len() {
        return Err(ModelError::Dimension(format!("{} targets vs {} predictions", y.len(), pred.len())));
    }
    if y.is_empty() {
        return Err(ModelError::Empty);
    }
    let n = y.len() as f64;
    let mean = y.iter().sum::<f64>() / n;
    let sse: f64 = y.iter().zip(pred).map(|(a, b)| (a - b).powi(2)).sum();
    let sst: f64 = y.iter().map(|a| (a - mean).powi(2)).sum();
    let scale: f64 = y.iter().map(|a| a * a).sum();
    let r2 = (sst > 1e-24 * scale.max(f64::MIN_POSITIVE)).then(|| 1.0 - sse / sst);
    Ok(EvalReport { model: tag.to_string(), outcome: None, month: None, n: y.len(), r2, mse: sse / n })
}

pub fn evaluate(model: &Model, x: &DesignMatrix, y: &[f64]) -> Result<EvalReport, ModelError> {
    check_xy(x, y)?;
    evaluate_predictions(model.tag(), y, &model.predict(x))
}

/// Same-month value from the prior year, unchanged.
pub fn seasonal_naive_predict(prior_year_outcome: Option<f64>) -> Option<f64> {
    prior_year_outcome
}

/// Baseline evaluation with the count of rows lacking a prior-year value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselineEval {
    pub report: EvalReport,
    pub excluded: usize,
}

impl BaselineEval {
    pub fn evaluate(prior: &[Option<f64>], y: &[f64]) -> Result<BaselineEval, ModelError> {
        if prior.len() != y.len() {
            return Err(ModelError::Dimension(format!("{} priors vs {} targets", prior.len(), y.len())));
        }
        let (yy, pp): (Vec<f64>, Vec<f64>) =
            y.iter().zip(prior).filter_map(|(&t, &p)| seasonal_naive_predict(p).map(|p| (t, p))).unzip();
        Ok(BaselineEval { excluded: y.len() - yy.len(), report: evaluate_predictions("seasonal_naive", &yy, &pp)? })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn definitions() {
        let y = [1.0, 2.0, 4.0];
        let r = evaluate_predictions("m", &y, &y).unwrap();
        assert_eq!((r.r2, r.mse), (Some(1.0), 0.0));
        let mean = 7.0 / 3.0;
        let r = evaluate_predictions("m", &y, &[mean; 3]).unwrap();
        assert!(r.r2.unwrap().abs() < 1e-15);
        let r = evaluate_predictions("m", &[3.0; 4], &[1.0, 3.0, 3.0, 3.0]).unwrap();
        assert_eq!((r.r2, r.mse), (None, 1.0));
    }

    #[test]
    fn baseline_identity_and_exclusion() {
        assert_eq!(seasonal_naive_predict(Some(3.21)), Some(3.21));
        assert_eq!(seasonal_naive_predict(None), None);
        let b = BaselineEval::evaluate(&[Some(1.0), None, Some(2.0)], &[1.0, 5.0, 3.0]).unwrap();
        assert_eq!(b.excluded, 1);
        assert_eq!(b.report.n, 2);
        assert_eq!(b.report.mse, 0.5);
    }

    proptest! {
        #[test]
        fn matches_direct_oracle(data in proptest::collection::vec((-10.0f64..10.0, -10.0f64..10.0), 2..50)) {
            let y: Vec<f64> = data.iter().map(|d| d.0).collect();
            let p: Vec<f64> = data.iter().map(|d| d.1).collect();
            let r = evaluate_predictions("m", &y, &p).unwrap();
            // two-pass oracle with Kahan-free sums in a different order
            let n = y.len() as f64;
            let ybar = y.iter().rev().sum::<f64>() / n;
            let sst: f64 = y.iter().rev().map(|v| (v - ybar) * (v - ybar)).sum();
            let sse: f64 = y.iter().zip(&p).rev().map(|(a, b)| (a - b) * (a - b)).sum();
            prop_assert!((r.mse - sse / n).abs() < 1e-10);
            if sst > 1e-9 {
                prop_assert!((r.r2.unwrap() - (1.0 - sse / sst)).abs() < 1e-10 * (1.0 + sse / sst));
            }
        }
    }
}
