//! Residual-infused bootstrapped regressions.
//!
//! Each iteration draws noise from the empirical residual pool truncated to
//! `[-d, d]`, regresses `Y - (Yhat + eps)` on the design, and records the
//! coefficients. Iteration `i` uses its own seed stream, so parallel and
//! serial runs agree exactly.

use nalgebra::DMatrix;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::ols::OlsSolver;
use super::HeterogeneityError;
use crate::seed;
use crate::stats::quantile_sorted;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum NoiseMode {
    /// Independent draw per observation.
    #[default]
    PerObservation,
    /// One draw shared by every observation in an iteration.
    Shared,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BootstrapConfig {
    pub iterations: usize,
    pub seed: u64,
    /// Two-sided percentile interval level.
    pub level: f64,
    pub noise: NoiseMode,
}

impl Default for BootstrapConfig {
    fn default() -> Self {
        BootstrapConfig { iterations: 1000, seed: 0, level: 0.95, noise: NoiseMode::PerObservation }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoefficientSummary {
    pub name: String,
    pub median: f64,
    pub lower: f64,
    pub upper: f64,
    /// The interval excludes zero.
    pub significant: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BootstrapReport {
    pub coefficients: Vec<CoefficientSummary>,
    pub iterations: usize,
    pub seed: u64,
    pub level: f64,
    pub noise: NoiseMode,
    pub d: Option<f64>,
    pub pool_size: usize,
    pub n_obs: usize,
    /// Coefficient draws, one row per iteration.
    #[serde(skip)]
    pub draws: Vec<Vec<f64>>,
}

impl BootstrapReport {
    pub fn get(&self, name: &str) -> Option<&CoefficientSummary> {
        self.coefficients.iter().find(|c| c.name == name)
    }

    /// Re-summarises the stored draws at another interval level.
    pub fn at_level(&self, level: f64) -> BootstrapReport {
        let names: Vec<String> = self.coefficients.iter().map(|c| c.name.clone()).collect();
        BootstrapReport { coefficients: summarise(&names, &self.draws, level), level, ..self.clone() }
    }
}

/// Pool entries with `|r| <= d`.
pub fn truncate_pool(pool: &[f64], d: f64) -> Vec<f64> {
    pool.iter().copied().filter(|r| r.is_finite() && r.abs() <= d).collect()
}

/// Bootstraps OLS of `y - (yhat + eps)` on the design `x` (intercept included).
pub fn bootstrap_regress(
    names: Vec<String>,
    x: &DMatrix<f64>,
    y: &[f64],
    yhat: &[f64],
    residual_pool: &[f64],
    d: f64,
    config: &BootstrapConfig,
) -> Result<BootstrapReport, HeterogeneityError> {
    let n = x.nrows();
    if y.len() != n || yhat.len() != n {
        return Err(HeterogeneityError::Dimension(format!("{n} rows, {} outcomes, {} predictions", y.len(), yhat.len())));
    }
    if config.iterations == 0 {
        return Err(HeterogeneityError::InvalidParameter("iterations must be >= 1".into()));
    }
    if !(config.level > 0.0 && config.level < 1.0) {
        return Err(HeterogeneityError::InvalidParameter(format!("level {} not in (0, 1)", config.level)));
    }
    let pool = truncate_pool(residual_pool, d);
    if pool.is_empty() {
        return Err(HeterogeneityError::EmptyPool { d });
    }
    let solver = OlsSolver::new(names.clone(), x.clone())?;
    let base: Vec<f64> = y.iter().zip(yhat).map(|(a, b)| a - b).collect();
    let draws: Vec<Vec<f64>> = (0..config.iterations)
        .into_par_iter()
        .map(|it| {
            let mut rng = seed::stream_rng(config.seed, it as u64);
            let dep: Vec<f64> = match config.noise {
                NoiseMode::PerObservation => base.iter().map(|b| b - pool[rng.gen_range(0..pool.len())]).collect(),
                NoiseMode::Shared => {
                    let e = pool[rng.gen_range(0..pool.len())];
                    base.iter().map(|b| b - e).collect()
                }
            };
            solver.solve(&dep)
        })
        .collect();
    Ok(BootstrapReport {
        coefficients: summarise(&names, &draws, config.level),
        iterations: config.iterations,
        seed: config.seed,
        level: config.level,
        noise: config.noise,
        d: d.is_finite().then_some(d),
        pool_size: pool.len(),
        n_obs: n,
        draws,
    })
}

fn summarise(names: &[String], draws: &[Vec<f64>], level: f64) -> Vec<CoefficientSummary> {
    let tail = (1.0 - level) / 2.0;
    names
        .iter()
        .enumerate()
        .map(|(j, name)| {
            let mut v: Vec<f64> = draws.iter().map(|d| d[j]).collect();
            v.sort_by(f64::total_cmp);
            let q = |p| quantile_sorted(&v, p).expect("non-empty draws");
            let (lower, upper) = (q(tail), q(1.0 - tail));
            CoefficientSummary { name: name.clone(), median: q(0.5), lower, upper, significant: lower > 0.0 || upper < 0.0 }
        })
        .collect()
}
