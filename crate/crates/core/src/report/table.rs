//! Tables in CSV, JSON and aligned text.

use std::collections::BTreeSet;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::ReportError;
use crate::cohort::lookup;
use crate::counterfactual::{EvalReport, Outcome};
use crate::heterogeneity::{BootstrapReport, ConsistencyTable, INTERCEPT};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TableFormat {
    Csv,
    Json,
    Text,
}

impl TableFormat {
    pub fn extension(self) -> &'static str {
        match self {
            TableFormat::Csv => "csv",
            TableFormat::Json => "json",
            TableFormat::Text => "txt",
        }
    }
}

impl FromStr for TableFormat {
    type Err = ReportError;

    fn from_str(s: &str) -> Result<Self, ReportError> {
        match s {
            "csv" => Ok(TableFormat::Csv),
            "json" => Ok(TableFormat::Json),
            "text" | "txt" => Ok(TableFormat::Text),
            other => Err(ReportError::UnknownFormat(other.to_string())),
        }
    }
}

/// Formatted cells under a fixed header.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Table {
    pub title: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(title: impl Into<String>, columns: &[&str]) -> Table {
        Table { title: title.into(), columns: columns.iter().map(|c| c.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }
}

/// Two significant digits in scientific notation, two-digit signed exponent:
/// `-0.017` gives `-1.7E-02`.
pub fn sci(x: f64) -> String {
    if x.is_nan() {
        return "NaN".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let s = format!("{x:.1E}");
    let (mantissa, exp) = s.split_once('E').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    let sign = if exp < 0 { '-' } else { '+' };
    format!("{mantissa}E{sign}{:02}", exp.abs())
}

/// `sci` with a trailing `*` when `significant`.
pub fn sci_marked(x: f64, significant: bool) -> String {
    let mut s = sci(x);
    if significant {
        s.push('*');
    }
    s
}

pub fn render_table(table: &Table, format: TableFormat) -> String {
    match format {
        TableFormat::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(&table.columns).expect("in-memory write");
            for r in &table.rows {
                w.write_record(r).expect("in-memory write");
            }
            String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf8 cells")
        }
        TableFormat::Json => {
            let mut s = serde_json::to_string_pretty(&serde_json::json!({
                "title": table.title,
                "columns": table.columns,
                "rows": table.rows,
            }))
            .expect("table serializes");
            s.push('\n');
            s
        }
        TableFormat::Text => {
            let widths: Vec<usize> = (0..table.columns.len())
                .map(|j| table.rows.iter().map(|r| r[j].chars().count()).chain([table.columns[j].chars().count()]).max().unwrap_or(0))
                .collect();
            let line = |cells: &[String]| {
                let parts: Vec<String> = cells
                    .iter()
                    .zip(&widths)
                    .enumerate()
                    .map(|(j, (c, w))| if j == 0 { format!("{c:<w$}") } else { format!("{c:>w$}") })
                    .collect();
                parts.join("  ").trim_end().to_string()
            };
            let mut out = String::new();
            if !table.title.is_empty() {
                out.push_str(&table.title);
                out.push('\n');
            }
            out.push_str(&line(&table.columns));
            out.push('\n');
            let total = widths.iter().sum::<usize>() + 2 * widths.len().saturating_sub(1);
            out.push_str(&"-".repeat(total));
            out.push('\n');
            for r in &table.rows {
                out.push_str(&line(r));
                out.push('\n');
            }
            out
        }
    }
}

pub fn write_table(path: &std::path::Path, table: &Table, format: TableFormat) -> Result<(), ReportError> {
    std::fs::write(path, render_table(table, format)).map_err(|e| ReportError::Io(path.display().to_string(), e))
}

fn label(name: &str) -> String {
    if name == INTERCEPT {
        return "const".into();
    }
    lookup(name).map(|s| s.label.to_string()).unwrap_or_else(|| name.to_string())
}

/// Regression coefficients as median and interval, significant medians marked.
pub fn bootstrap_table(title: &str, report: &BootstrapReport) -> Table {
    let ci = format!("{}% CI", fmt_level(report.level));
    let mut t = Table::new(title, &["variable", "median", &ci]);
    for c in &report.coefficients {
        t.push(vec![label(&c.name), sci_marked(c.median, c.significant), format!("[{}, {}]", sci(c.lower), sci(c.upper))]);
    }
    t
}

fn fmt_level(level: f64) -> String {
    let p = level * 100.0;
    if (p - p.round()).abs() < 1e-9 {
        format!("{}", p.round() as i64)
    } else {
        format!("{p}")
    }
}

/// Outcome x model rows, R^2 then MSE per month. Models keep first-seen order.
pub fn eval_table(evals: &[EvalReport]) -> Table {
    let months: Vec<u32> = evals.iter().filter_map(|e| e.month).collect::<BTreeSet<_>>().into_iter().collect();
    let mut columns = vec!["outcome".to_string(), "model".to_string()];
    columns.extend(months.iter().map(|m| format!("R2 i={m}")));
    columns.extend(months.iter().map(|m| format!("MSE i={m}")));
    let mut t = Table { title: "Counterfactual prediction performance".into(), columns, rows: Vec::new() };
    let mut models: Vec<&str> = Vec::new();
    for e in evals {
        if !models.contains(&e.model.as_str()) {
            models.push(&e.model);
        }
    }
    let outcomes: Vec<Option<Outcome>> = {
        let mut o: Vec<Option<Outcome>> = Vec::new();
        for e in evals {
            if !o.contains(&e.outcome) {
                o.push(e.outcome);
            }
        }
        o.sort();
        o
    };
    for outcome in outcomes {
        for &model in &models {
            let find = |m: u32| evals.iter().find(|e| e.outcome == outcome && e.model == model && e.month == Some(m));
            if !months.iter().any(|&m| find(m).is_some()) {
                continue;
            }
            let mut row = vec![outcome.map(|o| o.as_str()).unwrap_or("").to_string(), model.to_string()];
            row.extend(months.iter().map(|&m| find(m).and_then(|e| e.r2).map(sci).unwrap_or_default()));
            row.extend(months.iter().map(|&m| find(m).map(|e| sci(e.mse)).unwrap_or_default()));
            t.push(row);
        }
    }
    t
}

/// Per-feature medians across months with the consistency flag.
pub fn consistency_table(title: &str, table: &ConsistencyTable) -> Table {
    let mut columns = vec!["variable".to_string()];
    columns.extend(table.months.iter().map(|m| format!("i={m}")));
    columns.push("flag".into());
    let mut t = Table { title: title.into(), columns, rows: Vec::new() };
    for r in &table.rows {
        let mut row = vec![label(&r.feature)];
        row.extend(r.cells.iter().map(|c| c.as_ref().map(|c| sci_marked(c.median, c.significant)).unwrap_or_default()));
        row.push(r.flag.as_str().into());
        t.push(row);
    }
    t
}
