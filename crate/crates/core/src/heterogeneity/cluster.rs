//! Complete-linkage clustering of features on `1 - |rho|`.

use serde::{Deserialize, Serialize};

use super::spearman::CorrelationMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum RepresentativeRule {
    /// Highest mean |rho| to the other cluster members; ties by input order.
    #[default]
    MostCentral,
    /// First member in input (registry) order.
    FirstListed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterSelection {
    pub threshold: f64,
    /// Member indices per cluster, each ascending; clusters ordered by first member.
    pub clusters: Vec<Vec<usize>>,
    /// One index per cluster, in the order of `clusters`.
    pub representatives: Vec<usize>,
    pub representative_names: Vec<String>,
}

impl ClusterSelection {
    /// Representatives sorted ascending (input order).
    pub fn selected(&self) -> Vec<usize> {
        let mut r = self.representatives.clone();
        r.sort_unstable();
        r
    }
}

/// Merges clusters while some pair has every cross-pair |rho| above
/// `threshold` (complete linkage, distance cut at `1 - threshold`). The pair
/// with the largest minimum |rho| merges first; ties go to the lowest indices.
pub fn cluster_features(corr: &CorrelationMatrix, threshold: f64, rule: RepresentativeRule) -> ClusterSelection {
    let p = corr.len();
    let mut clusters: Vec<Vec<usize>> = (0..p).map(|i| vec![i]).collect();
    // linkage[a][b]: min |rho| between clusters a and b
    let mut link: Vec<Vec<f64>> = (0..p).map(|i| (0..p).map(|j| corr.abs(i, j)).collect()).collect();
    let mut alive: Vec<bool> = vec![true; p];
    loop {
        let mut best: Option<(f64, usize, usize)> = None;
        for a in 0..p {
            if !alive[a] {
                continue;
            }
            for b in a + 1..p {
                if alive[b] && link[a][b] > threshold && best.map_or(true, |(s, _, _)| link[a][b] > s) {
                    best = Some((link[a][b], a, b));
                }
            }
        }
        let Some((_, a, b)) = best else { break };
        let moved = std::mem::take(&mut clusters[b]);
        clusters[a].extend(moved);
        clusters[a].sort_unstable();
        alive[b] = false;
        for c in 0..p {
            if alive[c] && c != a {
                let v = link[a][c].min(link[b][c]);
                link[a][c] = v;
                link[c][a] = v;
            }
        }
    }
    let mut out: Vec<Vec<usize>> = clusters.into_iter().zip(&alive).filter(|(_, &l)| l).map(|(c, _)| c).collect();
    out.sort_by_key(|c| c[0]);
    let representatives: Vec<usize> = out.iter().map(|c| representative(corr, c, rule)).collect();
    ClusterSelection {
        threshold,
        representative_names: representatives.iter().map(|&i| corr.names[i].clone()).collect(),
        clusters: out,
        representatives,
    }
}

fn representative(corr: &CorrelationMatrix, members: &[usize], rule: RepresentativeRule) -> usize {
    match rule {
        RepresentativeRule::FirstListed => members[0],
        RepresentativeRule::MostCentral => {
            let mut best = members[0];
            let mut best_score = f64::NEG_INFINITY;
            for &m in members {
                let score: f64 = members.iter().filter(|&&o| o != m).map(|&o| corr.abs(m, o)).sum();
                if score > best_score {
                    best = m;
                    best_score = score;
                }
            }
            best
        }
    }
}
