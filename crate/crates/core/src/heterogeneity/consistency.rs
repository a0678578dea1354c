//! Month-by-month consistency of bootstrapped coefficients.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::bootstrap::BootstrapReport;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ConsistencyFlag {
    /// Significant and positive in every reported month.
    #[serde(rename = "stable+")]
    StablePositive,
    #[serde(rename = "stable-")]
    StableNegative,
    /// Significant in both directions across months.
    #[serde(rename = "sign-change")]
    SignChange,
    /// Same median sign every month, not always significant.
    #[serde(rename = "consistent+")]
    ConsistentPositive,
    #[serde(rename = "consistent-")]
    ConsistentNegative,
    #[serde(rename = "mixed")]
    Mixed,
}

impl ConsistencyFlag {
    pub fn as_str(self) -> &'static str {
        match self {
            ConsistencyFlag::StablePositive => "stable+",
            ConsistencyFlag::StableNegative => "stable-",
            ConsistencyFlag::SignChange => "sign-change",
            ConsistencyFlag::ConsistentPositive => "consistent+",
            ConsistencyFlag::ConsistentNegative => "consistent-",
            ConsistencyFlag::Mixed => "mixed",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MonthCell {
    pub median: f64,
    pub significant: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConsistencyRow {
    pub feature: String,
    /// One entry per column month; `None` where that month is missing.
    pub cells: Vec<Option<MonthCell>>,
    pub flag: ConsistencyFlag,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConsistencyTable {
    pub months: Vec<u32>,
    pub rows: Vec<ConsistencyRow>,
}

pub fn classify(cells: &[Option<MonthCell>]) -> ConsistencyFlag {
    let present: Vec<MonthCell> = cells.iter().flatten().copied().collect();
    let sig_pos = present.iter().filter(|c| c.significant && c.median > 0.0).count();
    let sig_neg = present.iter().filter(|c| c.significant && c.median < 0.0).count();
    if present.is_empty() {
        return ConsistencyFlag::Mixed;
    }
    if sig_pos > 0 && sig_neg > 0 {
        return ConsistencyFlag::SignChange;
    }
    if sig_pos == present.len() {
        return ConsistencyFlag::StablePositive;
    }
    if sig_neg == present.len() {
        return ConsistencyFlag::StableNegative;
    }
    if present.iter().all(|c| c.median > 0.0) {
        return ConsistencyFlag::ConsistentPositive;
    }
    if present.iter().all(|c| c.median < 0.0) {
        return ConsistencyFlag::ConsistentNegative;
    }
    ConsistencyFlag::Mixed
}

/// Rows follow the coefficient order of the first report (intercept
/// excluded); `months` fixes the columns, so months without a report render
/// as empty cells.
pub fn multi_month_report(reports: &[(u32, &BootstrapReport)], months: &[u32]) -> ConsistencyTable {
    let by_month: BTreeMap<u32, &BootstrapReport> = reports.iter().map(|(m, r)| (*m, *r)).collect();
    let mut features: Vec<String> = Vec::new();
    for (_, r) in reports {
        for c in &r.coefficients {
            if c.name != super::ols::INTERCEPT && !features.contains(&c.name) {
                features.push(c.name.clone());
            }
        }
    }
    let rows = features
        .into_iter()
        .map(|feature| {
            let cells: Vec<Option<MonthCell>> = months
                .iter()
                .map(|m| {
                    by_month
                        .get(m)
                        .and_then(|r| r.get(&feature))
                        .map(|c| MonthCell { median: c.median, significant: c.significant })
                })
                .collect();
            let flag = classify(&cells);
            ConsistencyRow { feature, cells, flag }
        })
        .collect();
    ConsistencyTable { months: months.to_vec(), rows }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cell(median: f64, significant: bool) -> Option<MonthCell> {
        Some(MonthCell { median, significant })
    }

    #[test]
    fn flags() {
        assert_eq!(classify(&vec![cell(0.1, true); 6]), ConsistencyFlag::StablePositive);
        assert_eq!(classify(&vec![cell(-0.1, true); 6]), ConsistencyFlag::StableNegative);
        assert_eq!(classify(&[cell(0.1, true), cell(0.05, false), cell(-0.1, true)]), ConsistencyFlag::SignChange);
        assert_eq!(classify(&[cell(0.1, true), cell(0.05, false)]), ConsistencyFlag::ConsistentPositive);
        assert_eq!(classify(&[cell(-0.1, false), cell(-0.05, false)]), ConsistencyFlag::ConsistentNegative);
        assert_eq!(classify(&[cell(0.1, true), cell(-0.05, false)]), ConsistencyFlag::Mixed);
        assert_eq!(classify(&[cell(0.1, true), None, cell(0.2, true)]), ConsistencyFlag::StablePositive);
    }

    #[test]
    fn missing_month_is_empty_cell() {
        use crate::heterogeneity::bootstrap::{BootstrapReport, CoefficientSummary, NoiseMode};
        let rep = BootstrapReport {
            coefficients: vec![
                CoefficientSummary { name: "(intercept)".into(), median: 1.0, lower: 0.5, upper: 1.5, significant: true },
                CoefficientSummary { name: "f".into(), median: 0.2, lower: 0.1, upper: 0.3, significant: true },
            ],
            iterations: 1,
            seed: 0,
            level: 0.95,
            noise: NoiseMode::PerObservation,
            d: Some(1.0),
            pool_size: 1,
            n_obs: 1,
            draws: vec![],
        };
        let t = multi_month_report(&[(1, &rep), (3, &rep)], &[1, 2, 3]);
        assert_eq!(t.rows.len(), 1);
        assert!(t.rows[0].cells[1].is_none());
        assert_eq!(t.rows[0].flag, ConsistencyFlag::StablePositive);
    }
}
