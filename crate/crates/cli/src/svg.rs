//! Minimal static SVG line charts.

use std::fmt::Write;

pub const PALETTE: [&str; 6] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b",
];

pub struct Series {
    pub name: String,
    pub color: &'static str,
    pub points: Vec<(f64, f64)>,
    /// Draw as a step function (status flags).
    pub step: bool,
}

pub struct Chart {
    pub title: String,
    pub y_label: String,
    pub series: Vec<Series>,
    /// Fixed y range; derived from the data when `None`.
    pub y_range: Option<(f64, f64)>,
}

const WIDTH: f64 = 900.0;
const PANEL: f64 = 260.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 160.0;
const TOP: f64 = 36.0;
const BOTTOM: f64 = 40.0;
const MAX_POINTS: usize = 4000;

fn esc(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

/// Keeps every `k`-th point so a series stays under `MAX_POINTS`.
fn thin(points: &[(f64, f64)]) -> Vec<(f64, f64)> {
    let k = points.len().div_ceil(MAX_POINTS).max(1);
    let mut out: Vec<(f64, f64)> = points.iter().step_by(k).copied().collect();
    if let Some(&last) = points.last() {
        if out.last() != Some(&last) {
            out.push(last);
        }
    }
    out
}

fn nice_ticks(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let span = (hi - lo).max(1e-12);
    let raw = span / n as f64;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 2.5, 5.0, 10.0]
        .iter()
        .map(|m| m * mag)
        .find(|s| *s >= raw)
        .unwrap_or(10.0 * mag);
    let mut t = (lo / step).ceil() * step;
    let mut out = Vec::new();
    while t <= hi + 1e-9 * step {
        out.push(if t.abs() < 1e-12 * step { 0.0 } else { t });
        t += step;
    }
    out
}

fn fmt_tick(v: f64) -> String {
    let s = format!("{v:.3}");
    s.trim_end_matches('0').trim_end_matches('.').to_string()
}

fn panel(out: &mut String, chart: &Chart, y0: f64, x_range: (f64, f64)) {
    let (x_lo, x_hi) = x_range;
    let (mut y_lo, mut y_hi) = chart.y_range.unwrap_or_else(|| {
        let ys = chart
            .series
            .iter()
            .flat_map(|s| s.points.iter().map(|p| p.1));
        let (lo, hi) = ys.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), y| {
            (a.min(y), b.max(y))
        });
        if lo.is_finite() {
            let pad = 0.05 * (hi - lo).max(1e-3);
            (lo - pad, hi + pad)
        } else {
            (0.0, 1.0)
        }
    });
    if y_hi <= y_lo {
        y_lo -= 0.5;
        y_hi += 0.5;
    }
    let w = WIDTH - LEFT - RIGHT;
    let h = PANEL - TOP - BOTTOM;
    let sx = |x: f64| LEFT + (x - x_lo) / (x_hi - x_lo).max(1e-12) * w;
    let sy = |y: f64| y0 + TOP + h - (y - y_lo) / (y_hi - y_lo) * h;

    let _ = writeln!(
        out,
        r#"<text x="{:.1}" y="{:.1}" font-size="14" font-weight="bold">{}</text>"#,
        LEFT,
        y0 + 22.0,
        esc(&chart.title)
    );
    let _ = writeln!(
        out,
        r##"<rect x="{LEFT:.1}" y="{:.1}" width="{w:.1}" height="{h:.1}" fill="none" stroke="#444"/>"##,
        y0 + TOP
    );
    for t in nice_ticks(y_lo, y_hi, 5) {
        let y = sy(t);
        let _ = writeln!(
            out,
            r##"<line x1="{LEFT:.1}" y1="{y:.1}" x2="{:.1}" y2="{y:.1}" stroke="#ddd"/><text x="{:.1}" y="{:.1}" font-size="11" text-anchor="end">{}</text>"##,
            LEFT + w,
            LEFT - 6.0,
            y + 4.0,
            fmt_tick(t)
        );
    }
    for t in nice_ticks(x_lo, x_hi, 10) {
        let x = sx(t);
        let _ = writeln!(
            out,
            r##"<line x1="{x:.1}" y1="{:.1}" x2="{x:.1}" y2="{:.1}" stroke="#eee"/><text x="{x:.1}" y="{:.1}" font-size="11" text-anchor="middle">{}</text>"##,
            y0 + TOP,
            y0 + TOP + h,
            y0 + TOP + h + 16.0,
            fmt_tick(t)
        );
    }
    let _ = writeln!(
        out,
        r#"<text x="{:.1}" y="{:.1}" font-size="12" text-anchor="middle" transform="rotate(-90 {:.1} {:.1})">{}</text>"#,
        18.0,
        y0 + TOP + h / 2.0,
        18.0,
        y0 + TOP + h / 2.0,
        esc(&chart.y_label)
    );
    let _ = writeln!(
        out,
        r#"<text x="{:.1}" y="{:.1}" font-size="11" text-anchor="middle">time (s)</text>"#,
        LEFT + w / 2.0,
        y0 + PANEL - 6.0
    );
    for (k, s) in chart.series.iter().enumerate() {
        let pts = thin(&s.points);
        let mut d = String::new();
        let mut prev_y: Option<f64> = None;
        for (i, &(x, y)) in pts.iter().enumerate() {
            let (px, py) = (sx(x), sy(y.clamp(y_lo, y_hi)));
            if i == 0 {
                let _ = write!(d, "M{px:.2},{py:.2}");
            } else {
                if s.step {
                    if let Some(py0) = prev_y {
                        let _ = write!(d, " L{px:.2},{py0:.2}");
                    }
                }
                let _ = write!(d, " L{px:.2},{py:.2}");
            }
            prev_y = Some(py);
        }
        let _ = writeln!(
            out,
            r#"<path d="{d}" fill="none" stroke="{}" stroke-width="1.4"/>"#,
            s.color
        );
        let ly = y0 + TOP + 14.0 + 18.0 * k as f64;
        let lx = LEFT + w + 12.0;
        let _ = writeln!(
            out,
            r#"<line x1="{lx:.1}" y1="{ly:.1}" x2="{:.1}" y2="{ly:.1}" stroke="{}" stroke-width="2"/><text x="{:.1}" y="{:.1}" font-size="11">{}</text>"#,
            lx + 18.0,
            s.color,
            lx + 24.0,
            ly + 4.0,
            esc(&s.name)
        );
    }
}

/// Renders charts stacked vertically on a shared time axis. `stamp` is
/// written as a comment when given.
pub fn render(charts: &[Chart], stamp: Option<&str>) -> String {
    let (mut x_lo, mut x_hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for s in charts.iter().flat_map(|c| &c.series) {
        for p in &s.points {
            x_lo = x_lo.min(p.0);
            x_hi = x_hi.max(p.0);
        }
    }
    if !x_lo.is_finite() {
        (x_lo, x_hi) = (0.0, 1.0);
    }
    let height = PANEL * charts.len().max(1) as f64;
    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{height}" viewBox="0 0 {WIDTH} {height}" font-family="sans-serif">"#
    );
    if let Some(stamp) = stamp {
        let _ = writeln!(out, "<!-- generated {} -->", esc(stamp));
    }
    let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
    for (k, c) in charts.iter().enumerate() {
        panel(&mut out, c, PANEL * k as f64, (x_lo, x_hi));
    }
    out.push_str("</svg>\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn chart() -> Chart {
        Chart {
            title: "a < b".into(),
            y_label: "pu".into(),
            series: vec![Series {
                name: "v".into(),
                color: PALETTE[0],
                points: (0..10_000).map(|k| (k as f64 * 1e-3, 1.0)).collect(),
                step: false,
            }],
            y_range: None,
        }
    }

    #[test]
    fn escapes_and_thins() {
        let svg = render(&[chart()], None);
        assert!(svg.contains("a &lt; b"));
        assert!(!svg.contains("<!--"));
        let segments = svg.matches(" L").count();
        assert!(segments < MAX_POINTS + 10);
    }

    #[test]
    fn stamp_is_the_only_difference() {
        let a = render(&[chart()], Some("t1"));
        let b = render(&[chart()], None);
        assert_eq!(a.replace("<!-- generated t1 -->\n", ""), b);
    }

    #[test]
    fn ticks_cover_range() {
        let t = nice_ticks(0.0, 10.0, 10);
        assert_eq!(t.first(), Some(&0.0));
        assert_eq!(t.last(), Some(&10.0));
    }
}
