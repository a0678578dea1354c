//! Random forests: bootstrap resamples with per-split feature subsampling.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::tree::{fit_tree_on, RegressionTree, SplitMode, TreeParams};
use super::{check_xy, DesignMatrix, ModelError};
use crate::seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MaxFeatures {
    All,
    Sqrt,
    Count(usize),
}

impl MaxFeatures {
    pub fn resolve(self, p: usize) -> usize {
        match self {
            MaxFeatures::All => p,
            MaxFeatures::Sqrt => ((p as f64).sqrt().floor() as usize).max(1),
            MaxFeatures::Count(k) => k.clamp(1, p.max(1)),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RfParams {
    pub n_trees: usize,
    pub max_depth: Option<usize>,
    pub min_samples_leaf: usize,
    pub max_features: MaxFeatures,
    /// Draw a bootstrap resample per tree; otherwise every tree sees all rows.
    #[serde(default = "yes")]
    pub bootstrap: bool,
    pub seed: u64,
}

fn yes() -> bool {
    true
}

impl Default for RfParams {
    fn default() -> Self {
        RfParams { n_trees: 200, max_depth: None, min_samples_leaf: 5, max_features: MaxFeatures::Sqrt, bootstrap: true, seed: 0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RfModel {
    pub trees: Vec<RegressionTree>,
}

impl RfModel {
    pub fn predict_row(&self, x: &[f64]) -> f64 {
        self.trees.iter().map(|t| t.predict_row(x)).sum::<f64>() / self.trees.len() as f64
    }
}

pub fn fit_rf(x: &DesignMatrix, y: &[f64], params: &RfParams) -> Result<RfModel, ModelError> {
    check_xy(x, y)?;
    if params.n_trees == 0 {
        return Err(ModelError::InvalidParameter("n_trees must be >= 1".into()));
    }
    let n = y.len();
    let k = params.max_features.resolve(x.n_cols());
    let trees = (0..params.n_trees)
        .into_par_iter()
        .map(|t| {
            let tree_seed = seed::derive_seed(params.seed, t as u64);
            let rows: Vec<usize> = if params.bootstrap {
                let mut r = seed::rng(seed::derive_labeled(tree_seed, "bootstrap"));
                (0..n).map(|_| r.gen_range(0..n)).collect()
            } else {
                (0..n).collect()
            };
            let tp = TreeParams {
                max_depth: params.max_depth,
                min_samples_leaf: params.min_samples_leaf,
                max_features: Some(k),
                split_mode: SplitMode::Exact,
                seed: seed::derive_labeled(tree_seed, "features"),
            };
            fit_tree_on(x, y, &rows, &tp)
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(RfModel { trees })
}
