//! Fitted models and their on-disk format.

use serde::{Deserialize, Serialize};

use super::eval::Outcome;
use super::forest::{fit_rf, RfModel, RfParams};
use super::gbdt::{fit_gbdt, GbdtModel, GbdtParams};
use super::tree::RegressionTree;
use super::{DesignMatrix, ModelError};

pub const MODEL_FORMAT: &str = "teamshock-model";
pub const MODEL_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case")]
pub enum ModelParams {
    Gbdt(GbdtParams),
    Rf(RfParams),
}

impl ModelParams {
    pub fn tag(&self) -> &'static str {
        match self {
            ModelParams::Gbdt(_) => "gbdt",
            ModelParams::Rf(_) => "rf",
        }
    }

    pub fn fit(&self, x: &DesignMatrix, y: &[f64]) -> Result<Model, ModelError> {
        Ok(match self {
            ModelParams::Gbdt(p) => Model::Gbdt(fit_gbdt(x, y, p)?),
            ModelParams::Rf(p) => Model::Rf(fit_rf(x, y, p)?),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Model {
    Gbdt(GbdtModel),
    Rf(RfModel),
    Tree(RegressionTree),
}

impl Model {
    pub fn tag(&self) -> &'static str {
        match self {
            Model::Gbdt(_) => "gbdt",
            Model::Rf(_) => "rf",
            Model::Tree(_) => "tree",
        }
    }

    pub fn predict_row(&self, x: &[f64]) -> f64 {
        match self {
            Model::Gbdt(m) => m.predict_row(x),
            Model::Rf(m) => m.predict_row(x),
            Model::Tree(t) => t.predict_row(x),
        }
    }

    pub fn predict(&self, x: &DesignMatrix) -> Vec<f64> {
        (0..x.n_rows()).map(|i| self.predict_row(x.row(i))).collect()
    }
}

/// A model with the column names it was trained on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub format: String,
    pub version: u32,
    pub feature_names: Vec<String>,
    #[serde(default)]
    pub outcome: Option<Outcome>,
    #[serde(default)]
    pub month: Option<u32>,
    #[serde(default)]
    pub params: Option<ModelParams>,
    pub model: Model,
}

impl ModelFile {
    pub fn new(feature_names: Vec<String>, model: Model) -> Self {
        ModelFile {
            format: MODEL_FORMAT.into(),
            version: MODEL_VERSION,
            feature_names,
            outcome: None,
            month: None,
            params: None,
            model,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("model serializes")
    }

    pub fn from_json(s: &str) -> Result<ModelFile, ModelError> {
        let f: ModelFile = serde_json::from_str(s)?;
        if f.format != MODEL_FORMAT {
            return Err(ModelError::Format(format!("format {:?}", f.format)));
        }
        if f.version != MODEL_VERSION {
            return Err(ModelError::Format(format!("version {}", f.version)));
        }
        Ok(f)
    }

    /// Predicts after checking that `x` has the training columns in order.
    pub fn predict(&self, x: &DesignMatrix) -> Result<Vec<f64>, ModelError> {
        if x.names != self.feature_names {
            return Err(ModelError::ColumnMismatch { expected: self.feature_names.clone(), got: x.names.clone() });
        }
        let out = self.model.predict(x);
        if out.iter().any(|v| !v.is_finite()) {
            return Err(ModelError::NonFinite("predictions"));
        }
        Ok(out)
    }
}
