//! Relating treatment effects to team properties: rank correlations,
//! collinearity pruning, VIF, OLS and the residual-infused bootstrap.

mod bootstrap;
mod cluster;
mod consistency;
mod ols;
mod spearman;

pub use bootstrap::{
    bootstrap_regress, truncate_pool, BootstrapConfig, BootstrapReport, CoefficientSummary, NoiseMode,
};
pub use cluster::{cluster_features, ClusterSelection, RepresentativeRule};
pub use consistency::{classify, multi_month_report, ConsistencyFlag, ConsistencyRow, ConsistencyTable, MonthCell};
pub use ols::{design_with_intercept, ols, vif, OlsFit, OlsSolver, INTERCEPT};
pub use spearman::{mid_ranks, pearson, spearman, spearman_matrix, CorrelationMatrix};

#[derive(Debug, thiserror::Error)]
pub enum HeterogeneityError {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("need at least {needed} rows, got {got}")]
    TooFewRows { needed: usize, got: usize },
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
    #[error("design is rank deficient; dependent columns: {0:?}")]
    RankDeficient(Vec<String>),
    #[error("no residuals within [-{d}, {d}]")]
    EmptyPool { d: f64 },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

/// Centres and scales each column to unit sample standard deviation;
/// constant columns are only centred.
pub fn standardize(columns: &[Vec<f64>]) -> Vec<Vec<f64>> {
    columns
        .iter()
        .map(|c| {
            let m = crate::stats::mean(c).unwrap_or(0.0);
            let s = crate::stats::sample_sd(c).filter(|s| *s > 0.0).unwrap_or(1.0);
            c.iter().map(|v| (v - m) / s).collect()
        })
        .collect()
}
