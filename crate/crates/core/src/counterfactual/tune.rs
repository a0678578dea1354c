//! Train/test splitting and k-fold grid search.

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::eval::evaluate_predictions;
use super::forest::{MaxFeatures, RfParams};
use super::gbdt::GbdtParams;
use super::model::ModelParams;
use super::{check_xy, pick, DesignMatrix, ModelError};
use crate::seed;

fn permutation(n: usize, seed: u64) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut seed::rng(seed));
    idx
}

/// Seeded shuffle split; both index lists come back sorted ascending.
pub fn train_test_split(n: usize, test_fraction: f64, seed: u64) -> (Vec<usize>, Vec<usize>) {
    let perm = permutation(n, seed);
    let mut n_test = (n as f64 * test_fraction).round() as usize;
    if n >= 2 {
        n_test = n_test.clamp(1, n - 1);
    }
    let mut test = perm[..n_test.min(n)].to_vec();
    let mut train = perm[n_test.min(n)..].to_vec();
    test.sort_unstable();
    train.sort_unstable();
    (train, test)
}

/// Fold id per row: rows are shuffled, then dealt round-robin.
pub fn fold_assignment(n: usize, k: usize, seed: u64) -> Vec<usize> {
    let mut fold = vec![0; n];
    for (pos, &i) in permutation(n, seed).iter().enumerate() {
        fold[i] = pos % k;
    }
    fold
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TuneResult {
    pub best: ModelParams,
    pub best_index: usize,
    /// Mean validation MSE per grid entry.
    pub cv_mse: Vec<f64>,
}

/// Exhaustive grid search by mean validation MSE; the first minimiser in grid
/// order wins.
pub fn kfold_tune(
    x: &DesignMatrix,
    y: &[f64],
    grid: &[ModelParams],
    k: usize,
    seed: u64,
) -> Result<TuneResult, ModelError> {
    check_xy(x, y)?;
    if grid.is_empty() {
        return Err(ModelError::EmptyGrid);
    }
    if k < 2 || y.len() < k {
        return Err(ModelError::InvalidParameter(format!("need 2 <= k <= n, got k={k}, n={}", y.len())));
    }
    let folds = fold_assignment(y.len(), k, seed);
    let splits: Vec<(Vec<usize>, Vec<usize>)> = (0..k)
        .map(|f| {
            let (val, train): (Vec<usize>, Vec<usize>) = (0..y.len()).partition(|&i| folds[i] == f);
            (train, val)
        })
        .collect();
    let cv_mse = grid
        .par_iter()
        .map(|params| {
            let mut total = 0.0;
            for (train, val) in &splits {
                let model = params.fit(&x.select_rows(train), &pick(y, train))?;
                let pred = model.predict(&x.select_rows(val));
                total += evaluate_predictions(params.tag(), &pick(y, val), &pred)?.mse;
            }
            Ok(total / k as f64)
        })
        .collect::<Result<Vec<f64>, ModelError>>()?;
    let mut best_index = 0;
    for (i, m) in cv_mse.iter().enumerate() {
        if *m < cv_mse[best_index] {
            best_index = i;
        }
    }
    Ok(TuneResult { best: grid[best_index], best_index, cv_mse })
}

pub fn default_gbdt_grid() -> Vec<ModelParams> {
    let mut g = Vec::new();
    for n_trees in [100, 300] {
        for learning_rate in [0.05, 0.1] {
            for max_depth in [3, 5, 7] {
                for min_samples_leaf in [5, 20] {
                    g.push(ModelParams::Gbdt(GbdtParams {
                        n_trees,
                        learning_rate,
                        max_depth: Some(max_depth),
                        min_samples_leaf,
                        ..Default::default()
                    }));
                }
            }
        }
    }
    g
}

pub fn default_rf_grid(seed: u64) -> Vec<ModelParams> {
    let mut g = Vec::new();
    for max_depth in [None, Some(10)] {
        for max_features in [MaxFeatures::All, MaxFeatures::Sqrt] {
            g.push(ModelParams::Rf(RfParams { n_trees: 200, max_depth, min_samples_leaf: 5, max_features, bootstrap: true, seed }));
        }
    }
    g
}
