//! Counterfactual outcome predictors: regression trees, gradient boosting,
//! random forests and the seasonal-naive baseline.

mod eval;
mod forest;
mod gbdt;
mod model;
mod tree;
mod tune;

pub use eval::{evaluate, evaluate_predictions, seasonal_naive_predict, BaselineEval, EvalReport, Outcome};
pub use forest::{fit_rf, MaxFeatures, RfModel, RfParams};
pub use gbdt::{fit_gbdt, GbdtModel, GbdtParams};
pub use model::{Model, ModelFile, ModelParams, MODEL_FORMAT, MODEL_VERSION};
pub use tree::{fit_tree, fit_tree_on, Node, RegressionTree, SplitMode, TreeParams};
pub use tune::{default_gbdt_grid, default_rf_grid, fold_assignment, kfold_tune, train_test_split, TuneResult};

use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error)]
pub enum ModelError {
    #[error("empty training set")]
    Empty,
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
    #[error("feature columns do not match the model: expected {expected:?}, got {got:?}")]
    ColumnMismatch { expected: Vec<String>, got: Vec<String> },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("empty tuning grid")]
    EmptyGrid,
    #[error("unsupported model file: {0}")]
    Format(String),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

/// Dense row-major design matrix with named columns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DesignMatrix {
    pub names: Vec<String>,
    rows: usize,
    data: Vec<f64>,
}

impl DesignMatrix {
    pub fn new(names: Vec<String>, rows: Vec<Vec<f64>>) -> Result<Self, ModelError> {
        let p = names.len();
        let n = rows.len();
        let mut data = Vec::with_capacity(n * p);
        for (i, r) in rows.into_iter().enumerate() {
            if r.len() != p {
                return Err(ModelError::Dimension(format!("row {i} has {} values, expected {p}", r.len())));
            }
            data.extend(r);
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(ModelError::NonFinite("design matrix"));
        }
        Ok(DesignMatrix { names, rows: n, data })
    }

    /// Columns named `x0..x{p-1}`.
    pub fn unnamed(rows: Vec<Vec<f64>>) -> Result<Self, ModelError> {
        let p = rows.first().map_or(0, Vec::len);
        DesignMatrix::new((0..p).map(|j| format!("x{j}")).collect(), rows)
    }

    pub fn n_rows(&self) -> usize {
        self.rows
    }

    pub fn n_cols(&self) -> usize {
        self.names.len()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let p = self.n_cols();
        &self.data[i * p..(i + 1) * p]
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n_cols() + j]
    }

    pub fn select_rows(&self, idx: &[usize]) -> DesignMatrix {
        let mut data = Vec::with_capacity(idx.len() * self.n_cols());
        for &i in idx {
            data.extend_from_slice(self.row(i));
        }
        DesignMatrix { names: self.names.clone(), rows: idx.len(), data }
    }
}

pub(crate) fn check_xy(x: &DesignMatrix, y: &[f64]) -> Result<(), ModelError> {
    if x.n_rows() != y.len() {
        return Err(ModelError::Dimension(format!("{} rows vs {} targets", x.n_rows(), y.len())));
    }
    if y.is_empty() {
        return Err(ModelError::Empty);
    }
    if y.iter().any(|v| !v.is_finite()) {
        return Err(ModelError::NonFinite("targets"));
    }
    Ok(())
}

pub(crate) fn pick<T: Copy>(v: &[T], idx: &[usize]) -> Vec<T> {
    idx.iter().map(|&i| v[i]).collect()
}
