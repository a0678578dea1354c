//! Spearman rank correlation with mid-ranks.

use serde::{Deserialize, Serialize};

use super::HeterogeneityError;

/// 1-based ranks; tied values share the mean of the ranks they span.
pub fn mid_ranks(x: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..x.len()).collect();
    idx.sort_by(|&a, &b| x[a].total_cmp(&x[b]));
    let mut ranks = vec![0.0; x.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && x[idx[j + 1]] == x[idx[i]] {
            j += 1;
        }
        let r = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            ranks[k] = r;
        }
        i = j + 1;
    }
    ranks
}

/// Pearson correlation; `None` if either side is constant.
pub fn pearson(a: &[f64], b: &[f64]) -> Option<f64> {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        let (dx, dy) = (x - ma, y - mb);
        sab += dx * dy;
        saa += dx * dx;
        sbb += dy * dy;
    }
    if saa <= 0.0 || sbb <= 0.0 {
        return None;
    }
    Some((sab / (saa.sqrt() * sbb.sqrt())).clamp(-1.0, 1.0))
}

pub fn spearman(a: &[f64], b: &[f64]) -> Option<f64> {
    pearson(&mid_ranks(a), &mid_ranks(b))
}

/// Symmetric matrix of pairwise rank correlations; `None` off the diagonal
/// where a column is constant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationMatrix {
    pub names: Vec<String>,
    pub values: Vec<Vec<Option<f64>>>,
    /// Columns with a single distinct value.
    pub constant: Vec<String>,
}

impl CorrelationMatrix {
    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn get(&self, i: usize, j: usize) -> Option<f64> {
        self.values[i][j]
    }

    /// |rho|, with missing correlations counted as 0.
    pub fn abs(&self, i: usize, j: usize) -> f64 {
        self.values[i][j].map_or(0.0, f64::abs)
    }
}

pub fn spearman_matrix(names: &[String], columns: &[Vec<f64>]) -> Result<CorrelationMatrix, HeterogeneityError> {
    if names.len() != columns.len() {
        return Err(HeterogeneityError::Dimension(format!("{} names for {} columns", names.len(), columns.len())));
    }
    let n = columns.first().map_or(0, Vec::len);
    if n < 3 {
        return Err(HeterogeneityError::TooFewRows { needed: 3, got: n });
    }
    if columns.iter().any(|c| c.len() != n) {
        return Err(HeterogeneityError::Dimension("columns differ in length".into()));
    }
    if columns.iter().flatten().any(|v| !v.is_finite()) {
        return Err(HeterogeneityError::NonFinite("correlation input"));
    }
    let ranks: Vec<Vec<f64>> = columns.iter().map(|c| mid_ranks(c)).collect();
    let p = columns.len();
    let mut values = vec![vec![None; p]; p];
    for i in 0..p {
        values[i][i] = Some(1.0);
        for j in i + 1..p {
            let r = pearson(&ranks[i], &ranks[j]);
            values[i][j] = r;
            values[j][i] = r;
        }
    }
    let constant = (0..p).filter(|&i| columns[i].iter().all(|&v| v == columns[i][0])).map(|i| names[i].clone()).collect();
    Ok(CorrelationMatrix { names: names.to_vec(), values, constant })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn oracle_rank(x: &[f64], i: usize) -> f64 {
        let below = x.iter().filter(|&&v| v < x[i]).count() as f64;
        let equal = x.iter().filter(|&&v| v == x[i]).count() as f64;
        below + (equal + 1.0) / 2.0
    }

    fn oracle_pearson(a: &[f64], b: &[f64]) -> f64 {
        // single-pass raw-moment formula
        let n = a.len() as f64;
        let (sa, sb): (f64, f64) = (a.iter().sum(), b.iter().sum());
        let sab: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
        let saa: f64 = a.iter().map(|x| x * x).sum();
        let sbb: f64 = b.iter().map(|x| x * x).sum();
        (n * sab - sa * sb) / ((n * saa - sa * sa).sqrt() * (n * sbb - sb * sb).sqrt())
    }

    #[test]
    fn monotone_cases() {
        let x: Vec<f64> = (0..10).map(f64::from).collect();
        let y: Vec<f64> = x.iter().map(|v| v.exp()).collect();
        let neg: Vec<f64> = x.iter().map(|v| -v).collect();
        assert!((spearman(&x, &y).unwrap() - 1.0).abs() < 1e-15);
        assert!((spearman(&x, &neg).unwrap() + 1.0).abs() < 1e-15);
        assert_eq!(mid_ranks(&[3.0, 1.0, 3.0, 2.0]), vec![3.5, 1.0, 3.5, 2.0]);
        let m = spearman_matrix(&["a".into(), "c".into()], &[x.clone(), vec![1.0; 10]]).unwrap();
        assert_eq!(m.get(0, 1), None);
        assert_eq!(m.constant, vec!["c".to_string()]);
        assert!(spearman_matrix(&["a".into()], &[vec![1.0, 2.0]]).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1_000))]
        #[test]
        fn tied_data_match_oracle(data in proptest::collection::vec((0i32..6, 0i32..6), 3..60)) {
            let a: Vec<f64> = data.iter().map(|d| f64::from(d.0)).collect();
            let b: Vec<f64> = data.iter().map(|d| f64::from(d.1)).collect();
            let ra: Vec<f64> = (0..a.len()).map(|i| oracle_rank(&a, i)).collect();
            let rb: Vec<f64> = (0..b.len()).map(|i| oracle_rank(&b, i)).collect();
            prop_assert_eq!(&mid_ranks(&a), &ra);
            match spearman(&a, &b) {
                Some(r) => prop_assert!((r - oracle_pearson(&ra, &rb)).abs() < 1e-12),
                None => prop_assert!(a.iter().all(|&v| v == a[0]) || b.iter().all(|&v| v == b[0])),
            }
        }
    }
}
