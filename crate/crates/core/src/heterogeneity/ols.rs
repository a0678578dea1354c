//! Ordinary least squares by Householder QR.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::HeterogeneityError;

pub const INTERCEPT: &str = "(intercept)";

/// Prepends an intercept column to the given feature columns.
pub fn design_with_intercept(names: &[String], columns: &[Vec<f64>]) -> Result<(Vec<String>, DMatrix<f64>), HeterogeneityError> {
    if names.len() != columns.len() {
        return Err(HeterogeneityError::Dimension(format!("{} names for {} columns", names.len(), columns.len())));
    }
    let n = columns.first().map_or(0, Vec::len);
    if columns.iter().any(|c| c.len() != n) {
        return Err(HeterogeneityError::Dimension("columns differ in length".into()));
    }
    let mut all = vec![INTERCEPT.to_string()];
    all.extend(names.iter().cloned());
    let n = if columns.is_empty() { 0 } else { n };
    let x = DMatrix::from_fn(n, columns.len() + 1, |i, j| if j == 0 { 1.0 } else { columns[j - 1][i] });
    Ok((all, x))
}

/// A factorised design that solves many right-hand sides.
#[derive(Debug, Clone)]
pub struct OlsSolver {
    pub names: Vec<String>,
    n: usize,
    qt: DMatrix<f64>,
    r: DMatrix<f64>,
    /// diag((R^T R)^{-1}) for standard errors.
    xtx_inv_diag: Vec<f64>,
}

impl OlsSolver {
    pub fn new(names: Vec<String>, x: DMatrix<f64>) -> Result<OlsSolver, HeterogeneityError> {
        let (n, p) = x.shape();
        if names.len() != p {
            return Err(HeterogeneityError::Dimension(format!("{} names for {p} columns", names.len())));
        }
        if n <= p {
            return Err(HeterogeneityError::TooFewRows { needed: p + 1, got: n });
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(HeterogeneityError::NonFinite("design matrix"));
        }
        let qr = x.qr();
        let r = qr.r();
        let qt = qr.q().transpose();
        let scale = (0..p).map(|j| r[(j, j)].abs()).fold(0.0, f64::max);
        let tol = scale * (n.max(p) as f64) * f64::EPSILON * 10.0;
        let dependent: Vec<String> = (0..p).filter(|&j| r[(j, j)].abs() <= tol).map(|j| names[j].clone()).collect();
        if !dependent.is_empty() {
            return Err(HeterogeneityError::RankDeficient(dependent));
        }
        let r_inv = r
            .clone()
            .solve_upper_triangular(&DMatrix::identity(p, p))
            .ok_or_else(|| HeterogeneityError::RankDeficient(names.clone()))?;
        let xtx_inv_diag = (0..p).map(|j| r_inv.row(j).iter().map(|v| v * v).sum()).collect();
        Ok(OlsSolver { names, n, qt, r, xtx_inv_diag })
    }

    pub fn n_obs(&self) -> usize {
        self.n
    }

    pub fn n_coef(&self) -> usize {
        self.names.len()
    }

    pub fn solve(&self, y: &[f64]) -> Vec<f64> {
        let b = &self.qt * DVector::from_column_slice(y);
        self.r.solve_upper_triangular(&b).expect("full rank checked at construction").iter().copied().collect()
    }

    pub fn fit(&self, x: &DMatrix<f64>, y: &[f64]) -> Result<OlsFit, HeterogeneityError> {
        if y.len() != self.n || x.nrows() != self.n {
            return Err(HeterogeneityError::Dimension(format!("{} targets for {} rows", y.len(), self.n)));
        }
        if y.iter().any(|v| !v.is_finite()) {
            return Err(HeterogeneityError::NonFinite("dependent variable"));
        }
        let coefficients = self.solve(y);
        let fitted = x * DVector::from_column_slice(&coefficients);
        let residuals: Vec<f64> = y.iter().zip(fitted.iter()).map(|(a, b)| a - b).collect();
        let rss: f64 = residuals.iter().map(|r| r * r).sum();
        let mean = y.iter().sum::<f64>() / self.n as f64;
        let tss: f64 = y.iter().map(|v| (v - mean).powi(2)).sum();
        let sigma2 = rss / (self.n - self.n_coef()) as f64;
        Ok(OlsFit {
            names: self.names.clone(),
            std_errors: self.xtx_inv_diag.iter().map(|d| (sigma2 * d).sqrt()).collect(),
            coefficients,
            r2: (tss > 0.0).then(|| 1.0 - rss / tss),
            residuals,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OlsFit {
    pub names: Vec<String>,
    pub coefficients: Vec<f64>,
    pub std_errors: Vec<f64>,
    /// Missing for a constant dependent variable.
    pub r2: Option<f64>,
    pub residuals: Vec<f64>,
}

/// OLS of `y` on an intercept plus the given columns.
pub fn ols(names: &[String], columns: &[Vec<f64>], y: &[f64]) -> Result<OlsFit, HeterogeneityError> {
    let (names, x) = design_with_intercept(names, columns)?;
    if columns.is_empty() {
        let x = DMatrix::from_element(y.len(), 1, 1.0);
        return OlsSolver::new(names, x.clone())?.fit(&x, y);
    }
    OlsSolver::new(names, x.clone())?.fit(&x, y)
}

const PERFECT_FIT_TOL: f64 = 1e-10;

/// `1 / (1 - R^2_j)` from regressing each column on all others plus an
/// intercept; `+inf` under exact collinearity or for a constant column.
/// Redundant regressors are dropped before fitting, which leaves `R^2_j`
/// unchanged.
pub fn vif(names: &[String], columns: &[Vec<f64>]) -> Result<Vec<f64>, HeterogeneityError> {
    if names.len() != columns.len() {
        return Err(HeterogeneityError::Dimension(format!("{} names for {} columns", names.len(), columns.len())));
    }
    let p = columns.len();
    let mut out = Vec::with_capacity(p);
    for j in 0..p {
        let mut keep: Vec<usize> = (0..p).filter(|&k| k != j).collect();
        let v = loop {
            let others_n: Vec<String> = keep.iter().map(|&k| names[k].clone()).collect();
            let others: Vec<Vec<f64>> = keep.iter().map(|&k| columns[k].clone()).collect();
            let (dn, x) = if others.is_empty() {
                (vec![INTERCEPT.to_string()], DMatrix::from_element(columns[j].len(), 1, 1.0))
            } else {
                design_with_intercept(&others_n, &others)?
            };
            match OlsSolver::new(dn, x.clone()) {
                Ok(s) => match s.fit(&x, &columns[j])?.r2 {
                    Some(r2) if 1.0 - r2 > PERFECT_FIT_TOL => break 1.0 / (1.0 - r2),
                    _ => break f64::INFINITY,
                },
                Err(HeterogeneityError::RankDeficient(bad)) => {
                    let before = keep.len();
                    keep.retain(|&k| !bad.contains(&names[k]));
                    if keep.len() == before {
                        break f64::INFINITY;
                    }
                }
                Err(e) => return Err(e),
            }
        };
        out.push(v);
    }
    Ok(out)
}
