//! Individual treatment effects, split-conformal bounds and distribution
//! comparisons between test residuals and post-shock effects.

pub(crate) mod conformal;
mod ks;

pub use conformal::{conformal_interval, conformal_rank, ConformalInterval};
pub use ks::{kolmogorov_sf, ks_statistic, ks_two_sample, KsResult};

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::counterfactual::Outcome;
use crate::stats::Summary;

#[derive(Debug, thiserror::Error)]
pub enum EffectsError {
    #[error("alpha must lie in (0, 1), got {0}")]
    InvalidAlpha(f64),
    #[error("empty {0}")]
    Empty(&'static str),
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
    #[error("unmatched repo ids: {0:?}")]
    Unmatched(Vec<String>),
    #[error("duplicate repo id {0:?}")]
    Duplicate(String),
}

/// Observed minus predicted outcome for one team and month.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IteRecord {
    pub repo_id: String,
    pub month: u32,
    pub outcome: Outcome,
    pub observed: f64,
    pub predicted: f64,
    pub ite: f64,
}

/// Pairs observed and predicted values by repo id; output follows `observed`.
pub fn compute_ite(
    observed: &[(String, f64)],
    predicted: &[(String, f64)],
    month: u32,
    outcome: Outcome,
) -> Result<Vec<IteRecord>, EffectsError> {
    let mut pred: HashMap<&str, f64> = HashMap::with_capacity(predicted.len());
    for (id, v) in predicted {
        if pred.insert(id.as_str(), *v).is_some() {
            return Err(EffectsError::Duplicate(id.clone()));
        }
    }
    let mut seen: HashMap<&str, ()> = HashMap::with_capacity(observed.len());
    for (id, _) in observed {
        if seen.insert(id.as_str(), ()).is_some() {
            return Err(EffectsError::Duplicate(id.clone()));
        }
    }
    let mut unmatched: Vec<String> = observed.iter().filter(|(id, _)| !pred.contains_key(id.as_str())).map(|(id, _)| id.clone()).collect();
    unmatched.extend(predicted.iter().filter(|(id, _)| !seen.contains_key(id.as_str())).map(|(id, _)| id.clone()));
    if !unmatched.is_empty() {
        unmatched.sort();
        return Err(EffectsError::Unmatched(unmatched));
    }
    observed
        .iter()
        .map(|(id, y)| {
            let yhat = pred[id.as_str()];
            let ite = y - yhat;
            if !ite.is_finite() {
                return Err(EffectsError::NonFinite("ITE"));
            }
            Ok(IteRecord { repo_id: id.clone(), month, outcome, observed: *y, predicted: yhat, ite })
        })
        .collect()
}

/// Mean ITE (the ATE estimate).
pub fn average_effect(records: &[IteRecord]) -> Option<f64> {
    crate::stats::mean(&records.iter().map(|r| r.ite).collect::<Vec<_>>())
}

/// Shared-bin histogram of two samples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairedHistogram {
    pub edges: Vec<f64>,
    pub residuals: Vec<usize>,
    pub effects: Vec<usize>,
}

impl PairedHistogram {
    pub fn new(a: &[f64], b: &[f64], bins: usize) -> PairedHistogram {
        let lo = a.iter().chain(b).copied().fold(f64::INFINITY, f64::min);
        let hi = a.iter().chain(b).copied().fold(f64::NEG_INFINITY, f64::max);
        let (lo, hi) = if lo < hi { (lo, hi) } else { (lo - 0.5, lo + 0.5) };
        let bins = bins.max(1);
        let width = (hi - lo) / bins as f64;
        let edges = (0..=bins).map(|i| lo + width * i as f64).collect();
        let count = |s: &[f64]| {
            let mut c = vec![0; bins];
            for &v in s {
                c[(((v - lo) / width) as usize).min(bins - 1)] += 1;
            }
            c
        };
        PairedHistogram { edges, residuals: count(a), effects: count(b) }
    }
}

/// Test-set residuals vs. post-shock effects for one outcome and month.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistributionReport {
    pub month: u32,
    pub outcome: Outcome,
    pub residuals: Summary,
    pub effects: Summary,
    pub ks: KsResult,
    pub histogram: PairedHistogram,
}

pub fn residual_distribution_report(
    test_y: &[f64],
    test_yhat: &[f64],
    target_ites: &[f64],
    month: u32,
    outcome: Outcome,
) -> Result<DistributionReport, EffectsError> {
    if test_y.len() != test_yhat.len() {
        return Err(EffectsError::Unmatched(vec![format!("{} observed vs {} predicted", test_y.len(), test_yhat.len())]));
    }
    let resid: Vec<f64> = test_y.iter().zip(test_yhat).map(|(y, p)| y - p).collect();
    let residuals = Summary::of(&resid).ok_or(EffectsError::Empty("test residuals"))?;
    let effects = Summary::of(target_ites).ok_or(EffectsError::Empty("target effects"))?;
    let ks = ks_two_sample(&resid, target_ites)?;
    Ok(DistributionReport { month, outcome, residuals, effects, ks, histogram: PairedHistogram::new(&resid, target_ites, 30) })
}
