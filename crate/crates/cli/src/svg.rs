//! Minimal static line-plot writer: one polyline per y-column over the
//! first (x) column, no external plotting machinery. Axes switch to log10
//! automatically when a strictly positive column spans more than two
//! decades. Non-finite points break the polyline.

use std::fmt::Write as _;

use crate::output::Dataset;

const W: f64 = 800.0;
const H: f64 = 500.0;
const MARGIN: f64 = 70.0;
const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"];

struct Axis {
    log: bool,
    min: f64,
    max: f64,
}

impl Axis {
    fn fit(values: impl Iterator<Item = f64> + Clone) -> Option<Axis> {
        let finite = values.filter(|v| v.is_finite());
        let min = finite.clone().fold(f64::INFINITY, f64::min);
        let max = finite.fold(f64::NEG_INFINITY, f64::max);
        if !(min.is_finite() && max.is_finite()) {
            return None;
        }
        let log = min > 0.0 && max / min > 100.0;
        let (mut min, mut max) = if log { (min.log10(), max.log10()) } else { (min, max) };
        if max - min < 1e-12 {
            // flat data still needs a window
            min -= 0.5;
            max += 0.5;
        }
        Some(Axis { log, min, max })
    }

    fn place(&self, v: f64, lo_px: f64, hi_px: f64) -> Option<f64> {
        if !v.is_finite() || (self.log && v <= 0.0) {
            return None;
        }
        let t = if self.log { v.log10() } else { v };
        Some(lo_px + (t - self.min) / (self.max - self.min) * (hi_px - lo_px))
    }

    fn label(&self, name: &str) -> String {
        if self.log {
            format!("log10 {name}")
        } else {
            name.to_string()
        }
    }

    fn edge(&self, end: f64) -> String {
        fmt_tick(if self.log { 10f64.powf(end) } else { end })
    }
}

/// Compact tick label: plain decimals in a human range, scientific outside.
fn fmt_tick(v: f64) -> String {
    let a = v.abs();
    if v == 0.0 || (1e-3..1e4).contains(&a) {
        let s = format!("{v:.4}");
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        format!("{v:.3e}")
    }
}

/// Render the dataset as an SVG line plot; None when nothing is plottable.
pub fn render(data: &Dataset, title: &str) -> Option<String> {
    if data.columns.len() < 2 || data.rows.is_empty() {
        return None;
    }
    let xs = data.column(0);
    let x_axis = Axis::fit(xs.iter().copied())?;
    let ys: Vec<Vec<f64>> = (1..data.columns.len()).map(|c| data.column(c)).collect();
    let y_axis = Axis::fit(ys.iter().flat_map(|c| c.iter().copied()))?;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">"#
    );
    let _ = writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<rect x="{MARGIN}" y="{MARGIN}" width="{}" height="{}" fill="none" stroke="black"/>"#,
        W - 2.0 * MARGIN,
        H - 2.0 * MARGIN
    );
    let _ = writeln!(
        s,
        r#"<text x="{}" y="30" text-anchor="middle" font-family="sans-serif" font-size="16">{title}</text>"#,
        W / 2.0
    );
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" text-anchor="middle" font-family="sans-serif" font-size="13">{}</text>"#,
        W / 2.0,
        H - 20.0,
        x_axis.label(data.columns[0])
    );
    // axis range annotations
    let _ = writeln!(
        s,
        r#"<text x="{MARGIN}" y="{}" font-family="sans-serif" font-size="11">{}</text>"#,
        H - MARGIN + 16.0,
        x_axis.edge(x_axis.min)
    );
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" text-anchor="end" font-family="sans-serif" font-size="11">{}</text>"#,
        W - MARGIN,
        H - MARGIN + 16.0,
        x_axis.edge(x_axis.max)
    );
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" text-anchor="end" font-family="sans-serif" font-size="11">{}</text>"#,
        MARGIN - 6.0,
        H - MARGIN,
        y_axis.edge(y_axis.min)
    );
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" text-anchor="end" font-family="sans-serif" font-size="11">{}</text>"#,
        MARGIN - 6.0,
        MARGIN + 10.0,
        y_axis.edge(y_axis.max)
    );

    for (ci, col) in ys.iter().enumerate() {
        let color = COLORS[ci % COLORS.len()];
        let mut segments: Vec<Vec<(f64, f64)>> = vec![Vec::new()];
        for (x, y) in xs.iter().zip(col.iter()) {
            let px = x_axis.place(*x, MARGIN, W - MARGIN);
            let py = y_axis.place(*y, H - MARGIN, MARGIN);
            match (px, py) {
                (Some(px), Some(py)) => segments.last_mut().expect("segment list").push((px, py)),
                _ => segments.push(Vec::new()),
            }
        }
        for seg in segments.iter().filter(|s| s.len() >= 2) {
            let pts: Vec<String> = seg.iter().map(|(x, y)| format!("{x:.2},{y:.2}")).collect();
            let _ = writeln!(
                s,
                r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="1.5"/>"#,
                pts.join(" ")
            );
        }
        // lone points still get a mark
        for seg in segments.iter().filter(|s| s.len() == 1) {
            let (x, y) = seg[0];
            let _ = writeln!(s, r#"<circle cx="{x:.2}" cy="{y:.2}" r="2.5" fill="{color}"/>"#);
        }
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" font-family="sans-serif" font-size="12" fill="{color}">{}</text>"#,
            W - MARGIN + 6.0,
            MARGIN + 16.0 * (ci + 1) as f64,
            data.columns[ci + 1]
        );
    }
    s.push_str("</svg>\n");
    Some(s)
}
