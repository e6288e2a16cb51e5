//! Minimal SVG rendering of experiment reports.

use std::fmt::Write;

use crate::error::{invalid, Result};
use crate::harness::{Curve, ExperimentReport};

const W: f64 = 640.0;
const H: f64 = 420.0;
const MARGIN: f64 = 60.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Style {
    Line,
    Points,
    Bars,
}

struct Frame {
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
    log_y: bool,
}

impl Frame {
    fn px(&self, x: f64) -> f64 {
        MARGIN + (x - self.x0) / (self.x1 - self.x0) * (W - 2.0 * MARGIN)
    }

    fn py(&self, y: f64) -> f64 {
        let (y, y0, y1) = if self.log_y { (y.log10(), self.y0.log10(), self.y1.log10()) } else { (y, self.y0, self.y1) };
        H - MARGIN - (y - y0) / (y1 - y0) * (H - 2.0 * MARGIN)
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

fn span(v: impl Iterator<Item = f64>) -> Option<(f64, f64)> {
    let (lo, hi) = v.filter(|x| x.is_finite()).fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), x| (a.min(x), b.max(x)));
    if lo > hi {
        return None;
    }
    if lo == hi {
        return Some((lo - 0.5, hi + 0.5));
    }
    Some((lo, hi))
}

/// One curve as a standalone SVG document. Points with non-finite (or, on a
/// log axis, nonpositive) ordinates are dropped.
pub fn render_curve(title: &str, xlabel: &str, ylabel: &str, curve: &Curve, style: Style, log_y: bool) -> Result<String> {
    if curve.x.len() != curve.y.len() {
        return Err(invalid!("curve has {} abscissae and {} ordinates", curve.x.len(), curve.y.len()));
    }
    let bands = curve.lo.len() == curve.x.len() && curve.hi.len() == curve.x.len();
    let keep = |y: f64| y.is_finite() && (!log_y || y > 0.0);
    let pts: Vec<(usize, f64, f64)> =
        curve.x.iter().zip(&curve.y).enumerate().filter(|(_, (x, y))| x.is_finite() && keep(**y)).map(|(i, (x, y))| (i, *x, *y)).collect();
    if pts.is_empty() {
        return Err(invalid!("curve {title:?} has no plottable points"));
    }
    let mut ys: Vec<f64> = pts.iter().map(|p| p.2).collect();
    if bands {
        ys.extend(pts.iter().flat_map(|p| [curve.lo[p.0], curve.hi[p.0]]).filter(|y| keep(*y)));
    }
    if style == Style::Bars && !log_y {
        ys.push(0.0);
    }
    let (mut x0, mut x1) = span(pts.iter().map(|p| p.1)).expect("nonempty");
    if style == Style::Bars {
        x0 -= 0.5;
        x1 += 0.5;
    }
    let (y0, y1) = if log_y {
        let (a, b) = span(ys.iter().map(|y| y.log10())).expect("nonempty");
        (10f64.powf(a), 10f64.powf(b))
    } else {
        span(ys.into_iter()).expect("nonempty")
    };
    let f = Frame { x0, x1, y0, y1, log_y };

    let mut out = String::new();
    let _ = writeln!(out, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">"#);
    let _ = writeln!(out, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(out, r#"<text x="{}" y="24" text-anchor="middle" font-size="16">{}</text>"#, W / 2.0, escape(title));
    let (l, r, t, b) = (MARGIN, W - MARGIN, MARGIN, H - MARGIN);
    let _ = writeln!(out, r#"<path d="M{l} {t} L{l} {b} L{r} {b}" fill="none" stroke="black"/>"#);
    for (v, anchor) in [(f.x0, "start"), (f.x1, "end")] {
        let _ = writeln!(out, r#"<text x="{}" y="{}" text-anchor="{anchor}" font-size="11">{}</text>"#, f.px(v), b + 16.0, tick(v));
    }
    for v in [f.y0, f.y1] {
        let _ = writeln!(out, r#"<text x="{}" y="{}" text-anchor="end" font-size="11">{}</text>"#, l - 4.0, f.py(v) + 4.0, tick(v));
    }
    let _ = writeln!(out, r#"<text x="{}" y="{}" text-anchor="middle" font-size="13">{}</text>"#, W / 2.0, H - 16.0, escape(xlabel));
    let _ = writeln!(
        out,
        r#"<text x="16" y="{}" text-anchor="middle" font-size="13" transform="rotate(-90 16 {})">{}{}</text>"#,
        H / 2.0,
        H / 2.0,
        escape(ylabel),
        if log_y { " (log)" } else { "" }
    );
    if bands {
        for &(i, x, _) in &pts {
            let (lo, hi) = (curve.lo[i], curve.hi[i]);
            if keep(lo) && keep(hi) {
                let _ = writeln!(out, r#"<line x1="{0}" y1="{1}" x2="{0}" y2="{2}" stroke="gray"/>"#, f.px(x), f.py(lo), f.py(hi));
            }
        }
    }
    match style {
        Style::Line => {
            let d: Vec<String> =
                pts.iter().enumerate().map(|(j, p)| format!("{}{:.2} {:.2}", if j == 0 { 'M' } else { 'L' }, f.px(p.1), f.py(p.2))).collect();
            let _ = writeln!(out, r#"<path d="{}" fill="none" stroke="steelblue" stroke-width="2"/>"#, d.join(" "));
        }
        Style::Points => {
            for p in &pts {
                let _ = writeln!(out, r#"<circle cx="{:.2}" cy="{:.2}" r="3" fill="steelblue"/>"#, f.px(p.1), f.py(p.2));
            }
        }
        Style::Bars => {
            let base = if log_y { f.y0 } else { 0.0 };
            let half = 0.4 * (f.px(1.0) - f.px(0.0)).abs().min(W);
            for p in &pts {
                let (top, bot) = (f.py(p.2), f.py(base));
                let _ = writeln!(
                    out,
                    r#"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="steelblue"/>"#,
                    f.px(p.1) - half,
                    top.min(bot),
                    2.0 * half,
                    (bot - top).abs()
                );
            }
        }
    }
    out.push_str("</svg>\n");
    Ok(out)
}

fn tick(v: f64) -> String {
    if v != 0.0 && (v.abs() < 1e-2 || v.abs() >= 1e4) {
        format!("{v:.2e}")
    } else {
        format!("{}", (v * 1000.0).round() / 1000.0)
    }
}

/// The natural figures of a report, as `(file stem, svg)`.
pub fn render_report(report: &ExperimentReport) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for (name, curve) in &report.curves {
        let (xl, yl, style, log_y) = match name.as_str() {
            "survival" => ("hops before the cycle t", "P(T >= t)", Style::Line, true),
            "event" => ("s", "probability", Style::Points, false),
            "cluster_sizes" => ("cluster size", "count", Style::Bars, false),
            "cycle_lengths" => ("cycle length", "walks", Style::Bars, false),
            _ => ("x", "y", Style::Line, false),
        };
        let title = format!("{} {}", report.kind, name.replace('_', " "));
        match render_curve(&title, xl, yl, curve, style, log_y) {
            Ok(svg) => out.push((format!("{}_{}", report.kind, name), svg)),
            Err(_) if curve.x.is_empty() => {}
            Err(e) => return Err(e),
        }
    }
    Ok(out)
}
