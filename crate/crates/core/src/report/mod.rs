//! Tables (CSV, JSON, text) and SVG plots of pipeline results.

mod svg;
mod table;

pub use svg::{render_plot, Plot, BAND_80_FILL, BAND_95_FILL};
pub use table::{bootstrap_table, consistency_table, eval_table, render_table, sci, sci_marked, write_table, Table, TableFormat};

#[derive(Debug, thiserror::Error)]
pub enum ReportError {
    #[error("unknown table format {0:?} (expected csv, json or text)")]
    UnknownFormat(String),
    #[error("{0}: {1}")]
    Io(String, #[source] std::io::Error),
}
