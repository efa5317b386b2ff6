//! Minimal self-contained SVG line and scatter plots, one 800x500 panel per
//! plot, stacked vertically.

use std::fmt::Write;

pub const WIDTH: f64 = 800.0;
pub const HEIGHT: f64 = 500.0;
const LEFT: f64 = 90.0;
const RIGHT: f64 = 30.0;
const TOP: f64 = 45.0;
const BOTTOM: f64 = 65.0;

pub const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Style {
    Line,
    Dots,
}

#[derive(Debug, Clone)]
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
    pub color: &'static str,
    pub style: Style,
}

impl Series {
    pub fn new(label: impl Into<String>, points: Vec<(f64, f64)>, color: &'static str, style: Style) -> Self {
        Self {
            label: label.into(),
            points,
            color,
            style,
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct Panel {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub log_x: bool,
    pub log_y: bool,
    pub series: Vec<Series>,
    /// Vertical markers at the given abscissae.
    pub marks: Vec<(f64, String)>,
}

#[derive(Debug, Clone, Copy)]
struct Axis {
    log: bool,
    lo: f64,
    hi: f64,
}

impl Axis {
    fn fit(values: impl Iterator<Item = f64>, log: bool) -> Self {
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for v in values.filter(|v| v.is_finite() && (!log || *v > 0.0)) {
            let v = if log { v.log10() } else { v };
            lo = lo.min(v);
            hi = hi.max(v);
        }
        if !lo.is_finite() {
            (lo, hi) = (0.0, 1.0);
        }
        if log {
            let (l, h) = (lo.floor(), hi.ceil());
            return Self {
                log,
                lo: l,
                hi: if h > l { h } else { l + 1.0 },
            };
        }
        let span = if hi > lo { hi - lo } else { lo.abs().max(1.0) };
        Self {
            log,
            lo: lo - 0.05 * span,
            hi: hi + 0.05 * span,
        }
    }

    fn unit(&self, v: f64) -> f64 {
        let v = if self.log { v.log10() } else { v };
        (v - self.lo) / (self.hi - self.lo)
    }

    fn ticks(&self) -> Vec<(f64, String)> {
        if self.log {
            let step = ((self.hi - self.lo) / 8.0).ceil().max(1.0);
            let mut out = Vec::new();
            let mut e = self.lo;
            while e <= self.hi + 1e-9 {
                out.push((10f64.powf(e), format!("1e{}", e as i64)));
                e += step;
            }
            return out;
        }
        let raw = (self.hi - self.lo) / 6.0;
        let mag = 10f64.powf(raw.log10().floor());
        let step = [1.0, 2.0, 5.0, 10.0]
            .iter()
            .map(|m| m * mag)
            .find(|s| *s >= raw)
            .unwrap_or(10.0 * mag);
        let mut v = (self.lo / step).ceil() * step;
        let mut out = Vec::new();
        while v <= self.hi + 1e-12 * step {
            let shown = if v.abs() < 1e-9 * step { 0.0 } else { v };
            out.push((shown, format!("{}", (shown * 1e6).round() / 1e6)));
            v += step;
        }
        out
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn render_panel(out: &mut String, p: &Panel, y0: f64) {
    let (w, h) = (WIDTH - LEFT - RIGHT, HEIGHT - TOP - BOTTOM);
    let xa = Axis::fit(
        p.series
            .iter()
            .flat_map(|s| s.points.iter().map(|q| q.0))
            .chain(p.marks.iter().map(|m| m.0)),
        p.log_x,
    );
    let ya = Axis::fit(p.series.iter().flat_map(|s| s.points.iter().map(|q| q.1)), p.log_y);
    let px = |v: f64| LEFT + w * xa.unit(v);
    let py = |v: f64| y0 + TOP + h * (1.0 - ya.unit(v));
    let visible = |(x, y): (f64, f64)| x.is_finite() && y.is_finite() && (!xa.log || x > 0.0) && (!ya.log || y > 0.0);

    let _ = writeln!(
        out,
        r##"<rect x="{LEFT}" y="{:.2}" width="{w}" height="{h}" fill="none" stroke="#333"/>"##,
        y0 + TOP
    );
    let _ = writeln!(
        out,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle" font-size="18">{}</text>"#,
        LEFT + w / 2.0,
        y0 + 28.0,
        escape(&p.title)
    );
    for (v, label) in xa.ticks() {
        let x = px(v);
        let _ = writeln!(
            out,
            r##"<line x1="{x:.2}" y1="{:.2}" x2="{x:.2}" y2="{:.2}" stroke="#ddd"/><text x="{x:.2}" y="{:.2}" text-anchor="middle" font-size="13">{label}</text>"##,
            y0 + TOP,
            y0 + TOP + h,
            y0 + TOP + h + 18.0
        );
    }
    for (v, label) in ya.ticks() {
        let y = py(v);
        let _ = writeln!(
            out,
            r##"<line x1="{LEFT}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="#ddd"/><text x="{:.2}" y="{:.2}" text-anchor="end" font-size="13">{label}</text>"##,
            LEFT + w,
            LEFT - 6.0,
            y + 4.0
        );
    }
    let _ = writeln!(
        out,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle" font-size="15">{}</text>"#,
        LEFT + w / 2.0,
        y0 + HEIGHT - 18.0,
        escape(&p.x_label)
    );
    let (lx, ly) = (22.0, y0 + TOP + h / 2.0);
    let _ = writeln!(
        out,
        r#"<text x="{lx}" y="{ly:.2}" text-anchor="middle" font-size="15" transform="rotate(-90 {lx} {ly:.2})">{}</text>"#,
        escape(&p.y_label)
    );
    for (v, label) in &p.marks {
        if !visible((*v, 1.0)) {
            continue;
        }
        let x = px(*v);
        let _ = writeln!(
            out,
            r##"<line x1="{x:.2}" y1="{:.2}" x2="{x:.2}" y2="{:.2}" stroke="#d62728" stroke-dasharray="6 4"/><text x="{:.2}" y="{:.2}" font-size="13" fill="#d62728">{}</text>"##,
            y0 + TOP,
            y0 + TOP + h,
            x + 4.0,
            y0 + TOP + 16.0,
            escape(label)
        );
    }
    for s in &p.series {
        let pts: Vec<(f64, f64)> = s.points.iter().copied().filter(|&q| visible(q)).collect();
        match s.style {
            Style::Line => {
                let path: Vec<String> = pts.iter().map(|&(x, y)| format!("{:.2},{:.2}", px(x), py(y))).collect();
                let _ = writeln!(
                    out,
                    r#"<polyline fill="none" stroke="{}" stroke-width="2" points="{}"/>"#,
                    s.color,
                    path.join(" ")
                );
            }
            Style::Dots => {
                for &(x, y) in &pts {
                    let _ = writeln!(
                        out,
                        r#"<circle cx="{:.2}" cy="{:.2}" r="3" fill="{}"/>"#,
                        px(x),
                        py(y),
                        s.color
                    );
                }
            }
        }
    }
    for (i, s) in p.series.iter().enumerate() {
        let y = y0 + TOP + 18.0 + 18.0 * i as f64;
        let x = LEFT + w - 200.0;
        let _ = writeln!(
            out,
            r#"<rect x="{x:.2}" y="{:.2}" width="14" height="4" fill="{}"/><text x="{:.2}" y="{:.2}" font-size="13">{}</text>"#,
            y - 4.0,
            s.color,
            x + 20.0,
            y + 1.0,
            escape(&s.label)
        );
    }
}

/// Renders the panels into one document carrying `manifest_json` as metadata.
pub fn render(panels: &[Panel], manifest_json: &str) -> String {
    let total = HEIGHT * panels.len().max(1) as f64;
    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{total}" viewBox="0 0 {WIDTH} {total}" font-family="sans-serif">"#
    );
    let _ = writeln!(out, "<metadata><![CDATA[{manifest_json}]]></metadata>");
    let _ = writeln!(out, r#"<rect width="{WIDTH}" height="{total}" fill="white"/>"#);
    for (i, p) in panels.iter().enumerate() {
        render_panel(&mut out, p, HEIGHT * i as f64);
    }
    out.push_str("</svg>\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn log_ticks_cover_decades() {
        let a = Axis::fit([1e-3, 0.5].into_iter(), true);
        let labels: Vec<String> = a.ticks().into_iter().map(|t| t.1).collect();
        assert_eq!(labels, ["1e-3", "1e-2", "1e-1", "1e0"]);
    }

    #[test]
    fn renders_stacked_panels_with_metadata() {
        let p = Panel {
            title: "a < b".into(),
            series: vec![Series::new("s", vec![(1.0, 2.0), (2.0, 3.0)], PALETTE[0], Style::Line)],
            ..Panel::default()
        };
        let svg = render(&[p.clone(), p], "{\"k\":1}");
        assert!(svg.contains(r#"viewBox="0 0 800 1000""#));
        assert!(svg.contains("<![CDATA[{\"k\":1}]]>"));
        assert!(svg.contains("a &lt; b"));
        assert_eq!(svg.matches("<polyline").count(), 2);
    }
}
