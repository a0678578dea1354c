//! End-to-end orchestration: configuration, the in-memory analysis and the
//! file-based stages with a reproducibility manifest.

pub mod analysis;
mod config;
mod stages;

pub use analysis::{analyze, Analysis, Cohort, EffectsOutput, Inputs, OutcomeRow, PlatformOutput, Prediction, RegressionOutput, TrainOutput};
pub use config::{ModelKind, PipelineConfig};
pub use stages::*;

#[derive(Debug, thiserror::Error)]
pub enum PipelineError {
    /// Rejected before any work was done.
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("stage {stage} failed: {message}")]
    Stage { stage: &'static str, message: String },
}

impl PipelineError {
    pub fn exit_code(&self) -> i32 {
        match self {
            PipelineError::Config(_) => 1,
            PipelineError::Stage { .. } => 2,
        }
    }

    pub fn stage(stage: &'static str, e: impl std::fmt::Display) -> PipelineError {
        PipelineError::Stage { stage, message: e.to_string() }
    }
}
