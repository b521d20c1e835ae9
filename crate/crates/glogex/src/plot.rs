//! Plot data as CSV and minimal SVG line charts.

use std::fmt::Write;

use glogex_core::glg::EpochLog;

pub const PLOT_HEADER: &str = "epoch,entropy,fidelity,formula_accuracy";

/// `epoch,entropy,fidelity,formula_accuracy`, one row per logged epoch.
/// Fidelity and formula accuracy are the training-split values the
/// log records.
pub fn plot_csv(log: &[EpochLog]) -> String {
    let mut out = String::from(PLOT_HEADER);
    out.push('\n');
    for e in log {
        writeln!(out, "{},{},{},{}", e.epoch, e.entropy, e.train_fidelity, e.formula_accuracy).unwrap();
    }
    out
}

/// Same columns prefixed by a `series` column, for several logs in one file.
pub fn plot_csv_series(series: &[(&str, &[EpochLog])]) -> String {
    let mut out = format!("series,{PLOT_HEADER}\n");
    for (name, log) in series {
        for e in *log {
            writeln!(out, "{name},{},{},{},{}", e.epoch, e.entropy, e.train_fidelity, e.formula_accuracy).unwrap();
        }
    }
    out
}

const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"];

/// Line chart of `(x, y)` series sharing both axes.
pub fn line_chart_svg(title: &str, y_label: &str, series: &[(String, Vec<(f64, f64)>)]) -> String {
    let (w, h, pad) = (640.0, 400.0, 50.0);
    let points = series.iter().flat_map(|(_, p)| p.iter());
    let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, 0.0f64, f64::NEG_INFINITY);
    for &(x, y) in points {
        x0 = x0.min(x);
        x1 = x1.max(x);
        y0 = y0.min(y);
        y1 = y1.max(y);
    }
    if !x0.is_finite() {
        (x0, x1, y1) = (0.0, 1.0, 1.0);
    }
    if x1 <= x0 {
        x1 = x0 + 1.0;
    }
    if y1 <= y0 {
        y1 = y0 + 1.0;
    }
    let sx = |x: f64| pad + (x - x0) / (x1 - x0) * (w - 2.0 * pad);
    let sy = |y: f64| h - pad - (y - y0) / (y1 - y0) * (h - 2.0 * pad);
    let mut out = String::new();
    writeln!(out, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" font-family="sans-serif" font-size="12">"#).unwrap();
    writeln!(out, r#"<rect width="{w}" height="{h}" fill="white"/>"#).unwrap();
    writeln!(out, r#"<text x="{}" y="20" text-anchor="middle">{}</text>"#, w / 2.0, escape(title)).unwrap();
    writeln!(out, r#"<line x1="{pad}" y1="{}" x2="{}" y2="{}" stroke="black"/>"#, h - pad, w - pad, h - pad).unwrap();
    writeln!(out, r#"<line x1="{pad}" y1="{pad}" x2="{pad}" y2="{}" stroke="black"/>"#, h - pad).unwrap();
    writeln!(out, r#"<text x="{}" y="{}" text-anchor="middle">epoch</text>"#, w / 2.0, h - 10.0).unwrap();
    writeln!(out, r#"<text x="15" y="{}" transform="rotate(-90 15 {})" text-anchor="middle">{}</text>"#, h / 2.0, h / 2.0, escape(y_label)).unwrap();
    for (v, anchor_y) in [(y0, sy(y0)), (y1, sy(y1))] {
        writeln!(out, r#"<text x="{}" y="{}" text-anchor="end">{v:.3}</text>"#, pad - 4.0, anchor_y + 4.0).unwrap();
    }
    for (v, anchor_x) in [(x0, sx(x0)), (x1, sx(x1))] {
        writeln!(out, r#"<text x="{anchor_x}" y="{}" text-anchor="middle">{v}</text>"#, h - pad + 16.0).unwrap();
    }
    for (k, (name, pts)) in series.iter().enumerate() {
        let color = COLORS[k % COLORS.len()];
        let path: Vec<String> = pts.iter().map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y))).collect();
        writeln!(out, r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#, path.join(" ")).unwrap();
        let ly = pad + 16.0 * k as f64;
        writeln!(out, r#"<text x="{}" y="{ly}" fill="{color}">{}</text>"#, w - pad - 120.0, escape(name)).unwrap();
    }
    out.push_str("</svg>\n");
    out
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

pub fn series_of(log: &[EpochLog], f: impl Fn(&EpochLog) -> f64) -> Vec<(f64, f64)> {
    log.iter().map(|e| (e.epoch as f64, f(e))).collect()
}
