//! Gradient boosting with squared loss.

use serde::{Deserialize, Serialize};

use super::tree::{fit_tree_on, RegressionTree, SplitMode, TreeParams};
use super::{check_xy, DesignMatrix, ModelError};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GbdtParams {
    pub n_trees: usize,
    pub learning_rate: f64,
    pub max_depth: Option<usize>,
    pub min_samples_leaf: usize,
    #[serde(default = "exact")]
    pub split_mode: SplitMode,
}

fn exact() -> SplitMode {
    SplitMode::Exact
}

impl Default for GbdtParams {
    fn default() -> Self {
        GbdtParams { n_trees: 100, learning_rate: 0.1, max_depth: Some(3), min_samples_leaf: 5, split_mode: SplitMode::Exact }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GbdtModel {
    pub initial: f64,
    pub learning_rate: f64,
    pub trees: Vec<RegressionTree>,
    /// Training MSE after 0, 1, ..., n_trees stages.
    pub train_mse: Vec<f64>,
}

impl GbdtModel {
    pub fn predict_row(&self, x: &[f64]) -> f64 {
        self.initial + self.learning_rate * self.trees.iter().map(|t| t.predict_row(x)).sum::<f64>()
    }
}

pub fn fit_gbdt(x: &DesignMatrix, y: &[f64], params: &GbdtParams) -> Result<GbdtModel, ModelError> {
    check_xy(x, y)?;
    if !(params.learning_rate > 0.0 && params.learning_rate <= 1.0) {
        return Err(ModelError::InvalidParameter(format!("learning_rate {} not in (0, 1]", params.learning_rate)));
    }
    let n = y.len();
    let initial = y.iter().sum::<f64>() / n as f64;
    // running tree sum, so predictions stay initial + lr * sum exactly
    let mut tree_sum = vec![0.0; n];
    let rows: Vec<usize> = (0..n).collect();
    let tp = TreeParams {
        max_depth: params.max_depth,
        min_samples_leaf: params.min_samples_leaf,
        max_features: None,
        split_mode: params.split_mode,
        seed: 0,
    };
    let mse = |ts: &[f64]| {
        y.iter().zip(ts).map(|(yi, s)| (yi - (initial + params.learning_rate * s)).powi(2)).sum::<f64>() / n as f64
    };
    let mut train_mse = vec![mse(&tree_sum)];
    let mut trees = Vec::with_capacity(params.n_trees);
    for _ in 0..params.n_trees {
        let resid: Vec<f64> =
            y.iter().zip(&tree_sum).map(|(yi, s)| yi - (initial + params.learning_rate * s)).collect();
        let tree = fit_tree_on(x, &resid, &rows, &tp)?;
        for (i, s) in tree_sum.iter_mut().enumerate() {
            *s += tree.predict_row(x.row(i));
        }
        train_mse.push(mse(&tree_sum));
        trees.push(tree);
    }
    Ok(GbdtModel { initial, learning_rate: params.learning_rate, trees, train_mse })
}
