//! CART regression trees (squared error).
//!
//! Exact mode presorts every feature once and keeps one sorted index array
//! per feature, stably partitioned at each split; candidate thresholds are the
//! midpoints of consecutive distinct values. Histogram mode buckets each
//! feature into at most `bins` quantile bins first. Samples go left when
//! `x <= threshold`. Ties in gain resolve to the lowest feature index, then
//! the lowest threshold.

use rand::seq::index::sample;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{check_xy, DesignMatrix, ModelError};
use crate::seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "mode")]
pub enum SplitMode {
    Exact,
    Histogram { bins: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TreeParams {
    /// `None` grows until the other stopping rules apply.
    pub max_depth: Option<usize>,
    pub min_samples_leaf: usize,
    /// Features considered per split; `None` means all.
    pub max_features: Option<usize>,
    pub split_mode: SplitMode,
    /// Drives feature subsampling only.
    pub seed: u64,
}

impl Default for TreeParams {
    fn default() -> Self {
        TreeParams { max_depth: Some(3), min_samples_leaf: 1, max_features: None, split_mode: SplitMode::Exact, seed: 0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Node {
    Leaf { value: f64, n: usize },
    Split { feature: usize, threshold: f64, left: usize, right: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionTree {
    pub n_features: usize,
    pub max_depth: Option<usize>,
    pub min_samples_leaf: usize,
    /// Root at index 0.
    pub nodes: Vec<Node>,
}

impl RegressionTree {
    pub fn predict_row(&self, x: &[f64]) -> f64 {
        let mut i = 0;
        loop {
            match self.nodes[i] {
                Node::Leaf { value, .. } => return value,
                Node::Split { feature, threshold, left, right } => {
                    i = if x[feature] <= threshold { left } else { right };
                }
            }
        }
    }

    pub fn predict(&self, x: &DesignMatrix) -> Vec<f64> {
        (0..x.n_rows()).map(|i| self.predict_row(x.row(i))).collect()
    }

    pub fn depth(&self) -> usize {
        fn go(t: &RegressionTree, i: usize) -> usize {
            match t.nodes[i] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + go(t, left).max(go(t, right)),
            }
        }
        go(self, 0)
    }

    pub fn n_leaves(&self) -> usize {
        self.nodes.iter().filter(|n| matches!(n, Node::Leaf { .. })).count()
    }

    pub fn is_valid(&self) -> bool {
        self.nodes.iter().all(|n| match *n {
            Node::Leaf { value, .. } => value.is_finite(),
            Node::Split { feature, threshold, left, right } => {
                feature < self.n_features && threshold.is_finite() && left < self.nodes.len() && right < self.nodes.len()
            }
        })
    }
}

pub fn fit_tree(x: &DesignMatrix, y: &[f64], params: &TreeParams) -> Result<RegressionTree, ModelError> {
    check_xy(x, y)?;
    let all: Vec<usize> = (0..y.len()).collect();
    fit_tree_on(x, y, &all, params)
}

/// Fits on the given sample rows; rows may repeat (bootstrap resamples).
pub fn fit_tree_on(x: &DesignMatrix, y: &[f64], rows: &[usize], params: &TreeParams) -> Result<RegressionTree, ModelError> {
    check_xy(x, y)?;
    if rows.is_empty() {
        return Err(ModelError::Empty);
    }
    if params.min_samples_leaf == 0 {
        return Err(ModelError::InvalidParameter("min_samples_leaf must be >= 1".into()));
    }
    if let SplitMode::Histogram { bins } = params.split_mode {
        if bins < 2 {
            return Err(ModelError::InvalidParameter("histogram mode needs >= 2 bins".into()));
        }
    }
    Ok(Builder::new(x, y, rows, params).grow())
}

#[derive(Clone, Copy)]
struct Candidate {
    gain: f64,
    feature: usize,
    threshold: f64,
}

fn better(a: Option<Candidate>, b: Option<Candidate>) -> Option<Candidate> {
    match (a, b) {
        (Some(a), Some(b)) => Some(if b.gain > a.gain { b } else { a }),
        (a, None) => a,
        (None, b) => b,
    }
}

/// Per-feature sample layout for the two split modes.
enum Layout {
    /// One presorted local-index array per feature.
    Sorted(Vec<Vec<u32>>),
    /// Bin codes per feature and a single member array.
    Binned { codes: Vec<Vec<u16>>, thresholds: Vec<Vec<f64>>, members: Vec<u32> },
}

struct Builder<'a> {
    params: &'a TreeParams,
    p: usize,
    /// Column-major local copy: `cols[f][k]` for local sample k.
    cols: Vec<Vec<f64>>,
    ys: Vec<f64>,
    layout: Layout,
    nodes: Vec<Node>,
    rng: seed::Rng,
}

const PAR_WORK: usize = 1 << 15;

impl<'a> Builder<'a> {
    fn new(x: &DesignMatrix, y: &[f64], rows: &[usize], params: &'a TreeParams) -> Self {
        let p = x.n_cols();
        let cols: Vec<Vec<f64>> = (0..p).map(|f| rows.iter().map(|&r| x.get(r, f)).collect()).collect();
        let ys: Vec<f64> = rows.iter().map(|&r| y[r]).collect();
        let m = rows.len();
        let layout = match params.split_mode {
            SplitMode::Exact => Layout::Sorted(
                cols.par_iter()
                    .map(|c| {
                        let mut o: Vec<u32> = (0..m as u32).collect();
                        o.sort_by(|&a, &b| c[a as usize].total_cmp(&c[b as usize]).then(a.cmp(&b)));
                        o
                    })
                    .collect(),
            ),
            SplitMode::Histogram { bins } => {
                let thresholds: Vec<Vec<f64>> = cols.iter().map(|c| bin_thresholds(c, bins)).collect();
                let codes = cols
                    .iter()
                    .zip(&thresholds)
                    .map(|(c, t)| c.iter().map(|&v| t.partition_point(|&th| th < v) as u16).collect())
                    .collect();
                Layout::Binned { codes, thresholds, members: (0..m as u32).collect() }
            }
        };
        Builder { params, p, cols, ys, layout, nodes: Vec::new(), rng: seed::rng(params.seed) }
    }

    fn grow(mut self) -> RegressionTree {
        let m = self.ys.len();
        self.nodes.push(Node::Leaf { value: 0.0, n: 0 });
        // (node id, range lo, range hi, depth)
        let mut stack = vec![(0usize, 0usize, m, 0usize)];
        while let Some((id, lo, hi, depth)) = stack.pop() {
            let members = self.members(lo, hi);
            let n = hi - lo;
            let (sum, sumsq) = members.iter().fold((0.0, 0.0), |(s, q), &k| {
                let v = self.ys[k as usize];
                (s + v, q + v * v)
            });
            let mean = sum / n as f64;
            let sse: f64 = members.iter().map(|&k| (self.ys[k as usize] - mean).powi(2)).sum();
            self.nodes[id] = Node::Leaf { value: mean, n };

            let leaf = self.params.max_depth.is_some_and(|d| depth >= d)
                || n < 2 * self.params.min_samples_leaf
                || self.p == 0
                || sse <= 1e-12 * sumsq.max(f64::MIN_POSITIVE);
            if leaf {
                continue;
            }
            let features = self.candidate_features();
            let Some(best) = self.best_split(&features, lo, hi, sum) else { continue };
            if best.gain <= 0.0 {
                continue;
            }
            let nl = self.partition(best.feature, best.threshold, lo, hi);
            let left = self.nodes.len();
            self.nodes.push(Node::Leaf { value: 0.0, n: 0 });
            self.nodes.push(Node::Leaf { value: 0.0, n: 0 });
            self.nodes[id] = Node::Split { feature: best.feature, threshold: best.threshold, left, right: left + 1 };
            stack.push((left + 1, lo + nl, hi, depth + 1));
            stack.push((left, lo, lo + nl, depth + 1));
        }
        RegressionTree {
            n_features: self.p,
            max_depth: self.params.max_depth,
            min_samples_leaf: self.params.min_samples_leaf,
            nodes: self.nodes,
        }
    }

    fn members(&self, lo: usize, hi: usize) -> &[u32] {
        match &self.layout {
            Layout::Sorted(order) => &order[0][lo..hi],
            Layout::Binned { members, .. } => &members[lo..hi],
        }
    }

    fn candidate_features(&mut self) -> Vec<usize> {
        match self.params.max_features {
            Some(k) if k < self.p => {
                let mut f = sample(&mut self.rng, self.p, k.max(1)).into_vec();
                f.sort_unstable();
                f
            }
            _ => (0..self.p).collect(),
        }
    }

    fn best_split(&self, features: &[usize], lo: usize, hi: usize, sum: f64) -> Option<Candidate> {
        let eval = |&f: &usize| self.best_for_feature(f, lo, hi, sum);
        // reduce in feature order so the lowest index wins ties
        let per_feature: Vec<Option<Candidate>> = if (hi - lo) * features.len() >= PAR_WORK {
            features.par_iter().map(eval).collect()
        } else {
            features.iter().map(eval).collect()
        };
        per_feature.into_iter().fold(None, better)
    }

    fn best_for_feature(&self, f: usize, lo: usize, hi: usize, sum: f64) -> Option<Candidate> {
        let n = hi - lo;
        let min_leaf = self.params.min_samples_leaf;
        let parent = sum * sum / n as f64;
        let col = &self.cols[f];
        let mut best: Option<Candidate> = None;
        match &self.layout {
            Layout::Sorted(order) => {
                let idx = &order[f][lo..hi];
                let mut sl = 0.0;
                for k in 0..n - 1 {
                    sl += self.ys[idx[k] as usize];
                    let nl = k + 1;
                    let (a, b) = (col[idx[k] as usize], col[idx[k + 1] as usize]);
                    if nl < min_leaf || n - nl < min_leaf || a >= b {
                        continue;
                    }
                    let sr = sum - sl;
                    let gain = sl * sl / nl as f64 + sr * sr / (n - nl) as f64 - parent;
                    if best.map_or(true, |c| gain > c.gain) {
                        let mid = a + (b - a) * 0.5;
                        best = Some(Candidate { gain, feature: f, threshold: if mid < b { mid } else { a } });
                    }
                }
            }
            Layout::Binned { codes, thresholds, members } => {
                let t = &thresholds[f];
                let mut hs = vec![0.0; t.len() + 1];
                let mut hc = vec![0usize; t.len() + 1];
                for &k in &members[lo..hi] {
                    let b = codes[f][k as usize] as usize;
                    hs[b] += self.ys[k as usize];
                    hc[b] += 1;
                }
                let (mut sl, mut nl) = (0.0, 0usize);
                for b in 0..t.len() {
                    sl += hs[b];
                    nl += hc[b];
                    if hc[b] == 0 || nl < min_leaf || n - nl < min_leaf {
                        continue;
                    }
                    let sr = sum - sl;
                    let gain = sl * sl / nl as f64 + sr * sr / (n - nl) as f64 - parent;
                    if best.map_or(true, |c| gain > c.gain) {
                        best = Some(Candidate { gain, feature: f, threshold: t[b] });
                    }
                }
            }
        }
        best
    }

    /// Stable partition of the node range; returns the left count.
    fn partition(&mut self, f: usize, threshold: f64, lo: usize, hi: usize) -> usize {
        let col = &self.cols[f];
        let goes_left = |k: u32| col[k as usize] <= threshold;
        let split = |arr: &mut [u32]| {
            let (l, r): (Vec<u32>, Vec<u32>) = arr.iter().partition(|&&k| goes_left(k));
            let nl = l.len();
            arr[..nl].copy_from_slice(&l);
            arr[nl..].copy_from_slice(&r);
            nl
        };
        match &mut self.layout {
            Layout::Sorted(order) => {
                let mut nl = 0;
                for o in order.iter_mut() {
                    nl = split(&mut o[lo..hi]);
                }
                nl
            }
            Layout::Binned { members, .. } => split(&mut members[lo..hi]),
        }
    }
}

/// Up to `bins - 1` thresholds at quantile cut points of the distinct values.
fn bin_thresholds(col: &[f64], bins: usize) -> Vec<f64> {
    let mut u = col.to_vec();
    u.sort_by(f64::total_cmp);
    u.dedup();
    let mid = |a: f64, b: f64| {
        let m = a + (b - a) * 0.5;
        if m < b {
            m
        } else {
            a
        }
    };
    if u.len() <= bins {
        return u.windows(2).map(|w| mid(w[0], w[1])).collect();
    }
    let mut t: Vec<f64> = (1..bins).map(|i| i * u.len() / bins).map(|j| mid(u[j - 1], u[j])).collect();
    t.dedup();
    t
}
