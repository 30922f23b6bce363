//! Minimal SVG charts: horizontal interval plots and x-y scatter with
//! error bars.

use std::fmt::Write as _;

const WIDTH: f64 = 640.0;
const MARGIN_LEFT: f64 = 220.0;
const MARGIN_RIGHT: f64 = 30.0;
const ROW: f64 = 22.0;
const TOP: f64 = 40.0;

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn header(out: &mut String, height: f64, title: &str) {
    let _ = write!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{height}" font-family="sans-serif" font-size="12">"#
    );
    let _ = write!(out, r#"<text x="{}" y="20" text-anchor="middle" font-size="14">{}</text>"#, WIDTH / 2.0, escape(title));
}

fn bounds(values: impl Iterator<Item = f64>, include: Option<f64>) -> (f64, f64) {
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for v in values.filter(|v| v.is_finite()).chain(include) {
        lo = lo.min(v);
        hi = hi.max(v);
    }
    if !lo.is_finite() {
        return (0.0, 1.0);
    }
    if hi - lo < 1e-12 {
        return (lo - 0.5, hi + 0.5);
    }
    let pad = 0.05 * (hi - lo);
    (lo - pad, hi + pad)
}

pub struct Interval {
    pub label: String,
    pub estimate: f64,
    pub low: f64,
    pub high: f64,
}

/// One row per interval with a vertical reference line at `reference`.
pub fn forest_plot(title: &str, rows: &[Interval], reference: f64, log_scale: bool) -> String {
    let tr = |v: f64| if log_scale { v.max(1e-300).ln() } else { v };
    let (lo, hi) = bounds(rows.iter().flat_map(|r| [tr(r.low), tr(r.high), tr(r.estimate)]), Some(tr(reference)));
    let plot_w = WIDTH - MARGIN_LEFT - MARGIN_RIGHT;
    let x = |v: f64| MARGIN_LEFT + (tr(v).clamp(lo, hi) - lo) / (hi - lo) * plot_w;
    let height = TOP + ROW * rows.len() as f64 + 40.0;
    let mut out = String::new();
    header(&mut out, height, title);
    let xr = x(reference);
    let _ = write!(out, r##"<line x1="{xr:.1}" y1="{TOP}" x2="{xr:.1}" y2="{:.1}" stroke="#999" stroke-dasharray="4 3"/>"##, height - 30.0);
    for (i, r) in rows.iter().enumerate() {
        let y = TOP + ROW * (i as f64 + 0.5);
        let _ = write!(out, r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{}</text>"#, MARGIN_LEFT - 8.0, y + 4.0, escape(&r.label));
        let _ = write!(out, r##"<line x1="{:.1}" y1="{y:.1}" x2="{:.1}" y2="{y:.1}" stroke="#333"/>"##, x(r.low), x(r.high));
        let _ = write!(out, r##"<circle cx="{:.1}" cy="{y:.1}" r="4" fill="#1f77b4"/>"##, x(r.estimate));
    }
    let axis_y = height - 20.0;
    for (v, anchor) in [(lo, "start"), (hi, "end")] {
        let shown = if log_scale { v.exp() } else { v };
        let px = MARGIN_LEFT + (v - lo) / (hi - lo) * plot_w;
        let _ = write!(out, r#"<text x="{px:.1}" y="{axis_y:.1}" text-anchor="{anchor}">{shown:.3}</text>"#);
    }
    out.push_str("</svg>\n");
    out
}

pub struct Series {
    pub name: String,
    /// `(x, y, y_low, y_high)`
    pub points: Vec<(f64, f64, f64, f64)>,
}

const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"];

/// Scatter with vertical error bars and a legend, one colour per series.
pub fn scatter_plot(title: &str, x_label: &str, y_label: &str, series: &[Series]) -> String {
    let (height, left, bottom) = (420.0, 70.0, 360.0);
    let right = WIDTH - 150.0;
    let (xlo, xhi) = bounds(series.iter().flat_map(|s| s.points.iter().map(|p| p.0)), None);
    let (ylo, yhi) = bounds(series.iter().flat_map(|s| s.points.iter().flat_map(|p| [p.1, p.2, p.3])), None);
    let px = |v: f64| left + (v - xlo) / (xhi - xlo) * (right - left);
    let py = |v: f64| bottom - (v.clamp(ylo, yhi) - ylo) / (yhi - ylo) * (bottom - TOP);
    let mut out = String::new();
    header(&mut out, height, title);
    let _ = write!(out, r##"<line x1="{left}" y1="{bottom}" x2="{right}" y2="{bottom}" stroke="#333"/>"##);
    let _ = write!(out, r##"<line x1="{left}" y1="{TOP}" x2="{left}" y2="{bottom}" stroke="#333"/>"##);
    for (v, y) in [(ylo, bottom), (yhi, TOP)] {
        let _ = write!(out, r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{v:.3}</text>"#, left - 6.0, y + 4.0);
    }
    for (v, anchor) in [(xlo, "start"), (xhi, "end")] {
        let _ = write!(out, r#"<text x="{:.1}" y="{:.1}" text-anchor="{anchor}">{v:.2}</text>"#, px(v), bottom + 16.0);
    }
    let _ = write!(out, r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#, (left + right) / 2.0, bottom + 36.0, escape(x_label));
    let _ = write!(
        out,
        r#"<text x="16" y="{:.1}" text-anchor="middle" transform="rotate(-90 16 {:.1})">{}</text>"#,
        (TOP + bottom) / 2.0,
        (TOP + bottom) / 2.0,
        escape(y_label)
    );
    for (i, s) in series.iter().enumerate() {
        let colour = PALETTE[i % PALETTE.len()];
        for &(x, y, l, h) in &s.points {
            let _ = write!(out, r#"<line x1="{0:.1}" y1="{1:.1}" x2="{0:.1}" y2="{2:.1}" stroke="{colour}"/>"#, px(x), py(l), py(h));
            let _ = write!(out, r#"<circle cx="{:.1}" cy="{:.1}" r="4" fill="{colour}"/>"#, px(x), py(y));
        }
        let ly = TOP + 10.0 + 18.0 * i as f64;
        let _ = write!(out, r#"<circle cx="{:.1}" cy="{ly:.1}" r="4" fill="{colour}"/>"#, right + 20.0);
        let _ = write!(out, r#"<text x="{:.1}" y="{:.1}">{}</text>"#, right + 30.0, ly + 4.0, escape(&s.name));
    }
    out.push_str("</svg>\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn plots_are_well_formed() {
        let f = forest_plot("t", &[Interval { label: "a<b".into(), estimate: 1.0, low: 0.5, high: 2.0 }], 1.0, true);
        assert!(f.starts_with("<svg") && f.trim_end().ends_with("</svg>"));
        assert!(f.contains("a&lt;b"));
        let s = scatter_plot("t", "x", "y", &[Series { name: "LR".into(), points: vec![(0.1, 0.5, 0.4, 0.6)] }]);
        assert_eq!(s.matches("<circle").count(), 2);
    }
}
