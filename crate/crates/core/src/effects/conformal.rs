//! Split-conformal error bounds.

use serde::{Deserialize, Serialize};

use super::EffectsError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConformalInterval {
    /// Half-width of `[-d, d]`; infinite when `k > n`.
    #[serde(with = "infinite_as_null")]
    pub d: f64,
    pub alpha: f64,
    pub n: usize,
    pub k: usize,
}

impl ConformalInterval {
    pub fn covers(&self, error: f64) -> bool {
        error.abs() <= self.d
    }

    pub fn is_unbounded(&self) -> bool {
        self.d.is_infinite()
    }
}

/// `k = ceil((n + 1)(1 - alpha))`.
pub fn conformal_rank(n: usize, alpha: f64) -> usize {
    // guard against (n+1)(1-alpha) landing a rounding error above an integer
    ((n as f64 + 1.0) * (1.0 - alpha) - 1e-9).ceil().max(0.0) as usize
}

/// The k-th smallest absolute residual with `k = ceil((n + 1)(1 - alpha))`.
pub fn conformal_interval(residuals: &[f64], alpha: f64) -> Result<ConformalInterval, EffectsError> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(EffectsError::InvalidAlpha(alpha));
    }
    if residuals.is_empty() {
        return Err(EffectsError::Empty("residuals"));
    }
    if residuals.iter().any(|r| !r.is_finite()) {
        return Err(EffectsError::NonFinite("residuals"));
    }
    let n = residuals.len();
    let k = conformal_rank(n, alpha).max(1);
    let d = if k > n {
        log::warn!("conformal rank k={k} exceeds n={n} at alpha={alpha}; bound is unbounded");
        f64::INFINITY
    } else {
        let mut abs: Vec<f64> = residuals.iter().map(|r| r.abs()).collect();
        abs.sort_by(f64::total_cmp);
        abs[k - 1]
    };
    Ok(ConformalInterval { d, alpha, n, k })
}

pub(crate) mod infinite_as_null {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else {
            s.serialize_none()
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::INFINITY))
    }
}
