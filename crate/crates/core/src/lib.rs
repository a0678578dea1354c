//! Estimating the effect of an external shock on remote teams observed
//! through collaboration event logs.
//!
//! The crate is organised as a pipeline:
//!
//! * [`event`]: parse and classify raw event logs into an interned [`event::Corpus`].
//! * [`timeseries`]: monthly platform aggregates, STL + Holt forecasts with
//!   prediction bands, observed-vs-forecast gap reports.
//! * [`cohort`]: stable-team selection and the per-quarter team feature registry.
//! * [`counterfactual`]: CART, gradient boosting, random forests and the
//!   seasonal-naive baseline, with k-fold tuning.
//! * [`effects`]: individual treatment effects, split-conformal error bounds
//!   and two-sample Kolmogorov-Smirnov tests.
//! * [`heterogeneity`]: Spearman clustering, VIF, OLS and the residual-infused
//!   bootstrap relating effects to team properties.
//! * [`synth`], [`pipeline`], [`report`]: synthetic corpora with known ground
//!   truth, end-to-end orchestration, tables and SVG plots.

pub mod calendar;
pub mod cohort;
pub mod counterfactual;
pub mod effects;
pub mod event;
pub mod heterogeneity;
pub mod seed;
pub mod stats;
pub mod pipeline;
pub mod report;
pub mod synth;
pub mod timeseries;
