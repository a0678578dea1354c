//! Standalone SVG plots. Output depends only on the input values: fixed
//! canvas, fixed font stack, fixed number formatting, no generated ids.

use std::fmt::Write;

use crate::effects::DistributionReport;
use crate::stats::Summary;
use crate::timeseries::{Forecast, MonthlySeries};

const W: f64 = 720.0;
const H: f64 = 360.0;
const LEFT: f64 = 64.0;
const RIGHT: f64 = 16.0;
const TOP: f64 = 36.0;
const BOTTOM: f64 = 44.0;
const FONT: &str = "DejaVu Sans, Arial, sans-serif";

pub const BAND_95_FILL: &str = "#c6dbef";
pub const BAND_80_FILL: &str = "#6baed6";
const HISTORY: &str = "#252525";
const POINT: &str = "#08519c";
const OBSERVED: &str = "#d62728";
const ITE_FILL: &str = "#fdae6b";
const RESID_FILL: &str = "#bdbdbd";

/// What to draw.
#[derive(Debug, Clone, Copy)]
pub enum Plot<'a> {
    Series(&'a MonthlySeries),
    /// History, point forecast with 80/95 bands, and optionally the observed
    /// months after the history.
    Forecast { history: &'a MonthlySeries, forecast: &'a Forecast, observed: Option<&'a MonthlySeries> },
    /// Per-month effect boxes beside test-residual boxes, one outcome.
    Distribution(&'a [DistributionReport]),
}

fn num(x: f64) -> String {
    let s = format!("{x:.2}");
    if s == "-0.00" {
        "0.00".into()
    } else {
        s
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

fn tick_label(v: f64) -> String {
    let a = v.abs();
    if a != 0.0 && !(1e-2..1e5).contains(&a) {
        super::table::sci(v)
    } else {
        let s = format!("{v:.3}");
        let s = s.trim_end_matches('0').trim_end_matches('.');
        if s == "-0" { "0".into() } else { s.to_string() }
    }
}

struct Frame {
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
}

impl Frame {
    fn new(x0: f64, x1: f64, lo: f64, hi: f64) -> Frame {
        let (lo, hi) = if hi > lo {
            let pad = (hi - lo) * 0.05;
            (lo - pad, hi + pad)
        } else {
            (lo - 1.0, hi + 1.0)
        };
        let (x0, x1) = if x1 > x0 { (x0, x1) } else { (x0 - 1.0, x0 + 1.0) };
        Frame { x0, x1, y0: lo, y1: hi }
    }

    fn px(&self, x: f64) -> f64 {
        LEFT + (x - self.x0) / (self.x1 - self.x0) * (W - LEFT - RIGHT)
    }

    fn py(&self, y: f64) -> f64 {
        H - BOTTOM - (y - self.y0) / (self.y1 - self.y0) * (H - TOP - BOTTOM)
    }

    fn points(&self, pts: &[(f64, f64)]) -> String {
        pts.iter().map(|&(x, y)| format!("{},{}", num(self.px(x)), num(self.py(y)))).collect::<Vec<_>>().join(" ")
    }
}

struct Svg(String);

impl Svg {
    fn new(title: &str) -> Svg {
        let mut s = String::new();
        writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="{FONT}" font-size="11">"#).unwrap();
        writeln!(s, r##"<rect x="0" y="0" width="{W}" height="{H}" fill="#ffffff"/>"##).unwrap();
        writeln!(s, r#"<text x="{}" y="20" font-size="13" text-anchor="middle">{}</text>"#, num(W / 2.0), escape(title)).unwrap();
        Svg(s)
    }

    fn axes(&mut self, f: &Frame) {
        let s = &mut self.0;
        writeln!(
            s,
            r##"<rect class="axes" x="{}" y="{}" width="{}" height="{}" fill="none" stroke="#969696"/>"##,
            num(LEFT),
            num(TOP),
            num(W - LEFT - RIGHT),
            num(H - TOP - BOTTOM)
        )
        .unwrap();
        for i in 0..=4 {
            let v = f.y0 + (f.y1 - f.y0) * i as f64 / 4.0;
            let y = num(f.py(v));
            writeln!(s, r##"<line x1="{}" y1="{y}" x2="{}" y2="{y}" stroke="#f0f0f0"/>"##, num(LEFT), num(W - RIGHT)).unwrap();
            writeln!(s, r#"<text x="{}" y="{y}" text-anchor="end" dominant-baseline="middle">{}</text>"#, num(LEFT - 4.0), tick_label(v)).unwrap();
        }
    }

    fn x_label(&mut self, x: f64, text: &str) {
        writeln!(self.0, r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#, num(x), num(H - BOTTOM + 16.0), escape(text)).unwrap();
    }

    fn line(&mut self, f: &Frame, class: &str, pts: &[(f64, f64)], color: &str, dashed: bool) {
        if pts.len() == 1 {
            let (x, y) = pts[0];
            writeln!(self.0, r#"<circle class="marker {class}" cx="{}" cy="{}" r="3" fill="{color}"/>"#, num(f.px(x)), num(f.py(y))).unwrap();
        } else if pts.len() > 1 {
            let dash = if dashed { r#" stroke-dasharray="5,3""# } else { "" };
            writeln!(self.0, r#"<polyline class="{class}" points="{}" fill="none" stroke="{color}" stroke-width="1.5"{dash}/>"#, f.points(pts)).unwrap();
        }
    }

    fn band(&mut self, f: &Frame, class: &str, upper: &[(f64, f64)], lower: &[(f64, f64)], fill: &str) {
        let mut pts = upper.to_vec();
        pts.extend(lower.iter().rev());
        writeln!(self.0, r#"<polygon class="{class}" points="{}" fill="{fill}" stroke="none"/>"#, f.points(&pts)).unwrap();
    }

    fn finish(mut self) -> String {
        self.0.push_str("</svg>\n");
        self.0
    }
}

fn finite_range(values: impl Iterator<Item = f64>) -> (f64, f64) {
    values.filter(|v| v.is_finite()).fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)))
}

fn month_ticks(svg: &mut Svg, f: &Frame, start: crate::calendar::YearMonth, n: usize) {
    let step = n.div_ceil(12).max(1);
    for i in (0..n).step_by(step) {
        svg.x_label(f.px(i as f64), &start.plus(i as i64).to_string());
    }
}

fn series_pts(s: &MonthlySeries, offset: i64) -> Vec<(f64, f64)> {
    s.values.iter().enumerate().map(|(i, &v)| ((offset + i as i64) as f64, v)).collect()
}

fn render_series(title: &str, s: &MonthlySeries) -> String {
    let mut svg = Svg::new(title);
    let (lo, hi) = finite_range(s.values.iter().copied());
    let (lo, hi) = if lo.is_finite() { (lo, hi) } else { (0.0, 1.0) };
    let f = Frame::new(0.0, s.len().saturating_sub(1) as f64, lo, hi);
    svg.axes(&f);
    month_ticks(&mut svg, &f, s.start_month, s.len());
    svg.line(&f, "history", &series_pts(s, 0), HISTORY, false);
    svg.finish()
}

fn render_forecast(title: &str, history: &MonthlySeries, fc: &Forecast, observed: Option<&MonthlySeries>) -> String {
    let mut svg = Svg::new(title);
    let offset = history.start_month.months_until(fc.start_month);
    let obs_offset = observed.map(|o| history.start_month.months_until(o.start_month)).unwrap_or(0);
    let band_vals = fc.bands.iter().flat_map(|b| b.lower.iter().chain(&b.upper)).copied();
    let obs_vals = observed.into_iter().flat_map(|o| o.values.iter()).copied();
    let (lo, hi) = finite_range(history.values.iter().copied().chain(fc.point.iter().copied()).chain(band_vals).chain(obs_vals));
    let (lo, hi) = if lo.is_finite() { (lo, hi) } else { (0.0, 1.0) };
    let n = (offset + fc.horizon() as i64).max(obs_offset + observed.map_or(0, |o| o.len() as i64)).max(history.len() as i64);
    let f = Frame::new(0.0, (n - 1).max(0) as f64, lo, hi);
    svg.axes(&f);
    month_ticks(&mut svg, &f, history.start_month, n as usize);

    // Bands and point forecast start from the last history value.
    let anchor = history.values.last().map(|&v| ((offset - 1) as f64, v));
    let with_anchor = |vals: &[f64]| {
        let mut pts: Vec<(f64, f64)> = anchor.into_iter().collect();
        pts.extend(vals.iter().enumerate().map(|(h, &v)| ((offset + h as i64) as f64, v)));
        pts
    };
    if fc.horizon() > 0 {
        for (level, class, fill) in [(95.0, "band-95", BAND_95_FILL), (80.0, "band-80", BAND_80_FILL)] {
            if let Some(b) = fc.band(level) {
                svg.band(&f, class, &with_anchor(&b.upper), &with_anchor(&b.lower), fill);
            }
        }
    }
    svg.line(&f, "history", &series_pts(history, 0), HISTORY, false);
    svg.line(&f, "forecast", &with_anchor(&fc.point), POINT, true);
    if let Some(o) = observed {
        svg.line(&f, "observed", &series_pts(o, obs_offset), OBSERVED, false);
    }
    svg.finish()
}

fn boxplot(svg: &mut Svg, f: &Frame, class: &str, cx: f64, half: f64, s: &Summary, fill: &str) {
    let (x0, x1) = (num(cx - half), num(cx + half));
    let (q1, q3, med) = (f.py(s.q1), f.py(s.q3), f.py(s.median));
    let c = num(cx);
    writeln!(svg.0, r##"<g class="{class}">"##).unwrap();
    writeln!(svg.0, r##"<line x1="{c}" y1="{}" x2="{c}" y2="{}" stroke="#525252"/>"##, num(f.py(s.min)), num(f.py(s.max))).unwrap();
    writeln!(svg.0, r##"<rect x="{x0}" y="{}" width="{}" height="{}" fill="{fill}" stroke="#525252"/>"##, num(q3), num(2.0 * half), num(q1 - q3)).unwrap();
    writeln!(svg.0, r##"<line x1="{x0}" y1="{}" x2="{x1}" y2="{}" stroke="#000000" stroke-width="2"/>"##, num(med), num(med)).unwrap();
    writeln!(svg.0, "</g>").unwrap();
}

fn render_distribution(title: &str, reports: &[DistributionReport]) -> String {
    let mut svg = Svg::new(title);
    let (lo, hi) = finite_range(reports.iter().flat_map(|r| [r.effects.min, r.effects.max, r.residuals.min, r.residuals.max, 0.0]));
    let (lo, hi) = if lo.is_finite() { (lo, hi) } else { (-1.0, 1.0) };
    let n = reports.len().max(1) as f64;
    let f = Frame::new(-0.5, n - 0.5, lo, hi);
    svg.axes(&f);
    let zero = num(f.py(0.0));
    writeln!(svg.0, r##"<line class="zero" x1="{}" y1="{zero}" x2="{}" y2="{zero}" stroke="#969696" stroke-dasharray="4,3"/>"##, num(LEFT), num(W - RIGHT)).unwrap();
    let slot = (f.px(1.0) - f.px(0.0)).abs();
    let half = (slot * 0.18).min(24.0);
    for (i, r) in reports.iter().enumerate() {
        let cx = f.px(i as f64);
        boxplot(&mut svg, &f, "box-ite", cx - half * 1.2, half, &r.effects, ITE_FILL);
        boxplot(&mut svg, &f, "box-residual", cx + half * 1.2, half, &r.residuals, RESID_FILL);
        svg.x_label(cx, &format!("i={}", r.month));
    }
    let ly = num(H - 10.0);
    writeln!(svg.0, r#"<rect x="{}" y="{}" width="10" height="10" fill="{ITE_FILL}"/>"#, num(LEFT), num(H - 19.0)).unwrap();
    writeln!(svg.0, r#"<text x="{}" y="{ly}">ITE (target)</text>"#, num(LEFT + 14.0)).unwrap();
    writeln!(svg.0, r#"<rect x="{}" y="{}" width="10" height="10" fill="{RESID_FILL}"/>"#, num(LEFT + 110.0), num(H - 19.0)).unwrap();
    writeln!(svg.0, r#"<text x="{}" y="{ly}">residual (reference test)</text>"#, num(LEFT + 124.0)).unwrap();
    svg.finish()
}

pub fn render_plot(title: &str, plot: &Plot) -> String {
    match *plot {
        Plot::Series(s) => render_series(title, s),
        Plot::Forecast { history, forecast, observed } => render_forecast(title, history, forecast, observed),
        Plot::Distribution(r) => render_distribution(title, r),
    }
}
