//! Stable-team selection and the per-quarter team-property registry.

mod features;
mod kernels;
mod outcomes;
pub mod registry;
mod select;
mod table;

pub use features::{
    extract_all, extract_features, extract_features_idx, hour_vector, tenure_stats, weekday_entropy, ActorIndex,
    FeatureVector, TenureKind,
};
pub use kernels::{coefficient_of_variation, off_segment_length, shannon_entropy, DistStats, HourActivityVector};
pub use outcomes::{month_counts, MonthCounts};
pub use registry::{feature_names, lookup, lookup_label, FeatureId, FeatureSpec, ModelTransform, N_FEATURES, REGISTRY};
pub use select::{quarterly_active_members, select_teams, SelectionCriteria};
pub use table::{schema_json, FeatureTable};

#[derive(Debug, thiserror::Error)]
pub enum CohortError {
    #[error("counts must be finite, non-negative and not all zero")]
    InvalidCounts,
    #[error("invalid selection criteria: {0}")]
    InvalidCriteria(String),
    #[error("repository {0:?} not present in the corpus")]
    UnknownRepo(String),
    #[error("unknown feature {0:?}")]
    UnknownFeature(String),
    #[error("actor index built for {index}, features requested for {requested}")]
    IndexMismatch { index: String, requested: String },
    #[error("feature CSV header does not match the registry")]
    BadHeader,
    #[error("feature CSV line {line}: bad value in column {column}")]
    BadValue { line: usize, column: String },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
