//! Two-sample Kolmogorov-Smirnov test.

use serde::{Deserialize, Serialize};

use super::EffectsError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KsResult {
    pub statistic: f64,
    pub p_value: f64,
    pub n_a: usize,
    pub n_b: usize,
}

/// `sup |F_a - F_b|` by a merge sweep over both sorted samples; tied values
/// are consumed together before the gap is measured.
pub fn ks_statistic(a: &[f64], b: &[f64]) -> f64 {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    d
}

/// Kolmogorov survival function `Q(l) = 2 sum_{j>=1} (-1)^{j-1} exp(-2 j^2 l^2)`.
pub fn kolmogorov_sf(lambda: f64) -> f64 {
    if lambda <= 0.0 {
        return 1.0;
    }
    // the alternating series converges slowly for small lambda; there Q ~ 1
    if lambda < 0.2 {
        return 1.0;
    }
    let mut sum = 0.0;
    let mut sign = 1.0;
    for j in 1..=200 {
        let jf = f64::from(j);
        let term = (-2.0 * jf * jf * lambda * lambda).exp();
        sum += sign * term;
        if term < 1e-16 {
            break;
        }
        sign = -sign;
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// D statistic and asymptotic p-value with effective size `n_a n_b / (n_a + n_b)`
/// and Stephens' small-sample correction
/// `lambda = (sqrt(ne) + 0.12 + 0.11 / sqrt(ne)) D`.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> Result<KsResult, EffectsError> {
    if a.is_empty() || b.is_empty() {
        return Err(EffectsError::Empty("KS sample"));
    }
    if a.iter().chain(b).any(|v| !v.is_finite()) {
        return Err(EffectsError::NonFinite("KS sample"));
    }
    let d = ks_statistic(a, b);
    let ne = (a.len() * b.len()) as f64 / (a.len() + b.len()) as f64;
    let sq = ne.sqrt();
    let p = if d == 0.0 { 1.0 } else { kolmogorov_sf((sq + 0.12 + 0.11 / sq) * d) };
    Ok(KsResult { statistic: d, p_value: p, n_a: a.len(), n_b: b.len() })
}
