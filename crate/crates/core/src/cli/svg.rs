//! Bare-bones SVG line/scatter charts with optional log axes.

use std::fmt::Write;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 480.0;
const MARGIN_L: f64 = 72.0;
const MARGIN_R: f64 = 24.0;
const MARGIN_T: f64 = 36.0;
const MARGIN_B: f64 = 56.0;

const PALETTE: [&str; 8] = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf"];

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Mark {
    Line,
    Points,
    LinePoints,
}

#[derive(Debug, Clone)]
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
    pub mark: Mark,
    /// Optional text next to each point.
    pub annotations: Vec<String>,
}

impl Series {
    pub fn new(label: impl Into<String>, points: Vec<(f64, f64)>, mark: Mark) -> Self {
        Self { label: label.into(), points, mark, annotations: Vec::new() }
    }
}

/// Filled axis-aligned rectangles in data coordinates, `[x0, y0, x1, y1]`.
#[derive(Debug, Clone)]
pub struct CellLayer {
    pub label: String,
    pub cells: Vec<[f64; 4]>,
}

#[derive(Debug, Clone, Default)]
pub struct Plot {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub log_x: bool,
    pub log_y: bool,
    pub series: Vec<Series>,
    pub layers: Vec<CellLayer>,
    pub x_range: Option<(f64, f64)>,
    pub y_range: Option<(f64, f64)>,
}

struct Axis {
    log: bool,
    lo: f64,
    hi: f64,
    px_lo: f64,
    px_hi: f64,
}

impl Axis {
    fn fit(log: bool, values: impl Iterator<Item = f64>, fixed: Option<(f64, f64)>, px: (f64, f64)) -> Axis {
        let (mut lo, mut hi) = match fixed {
            Some((a, b)) => (tr(log, a), tr(log, b)),
            None => values
                .filter(|v| v.is_finite() && (!log || *v > 0.0))
                .map(|v| tr(log, v))
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v))),
        };
        if !lo.is_finite() || !hi.is_finite() {
            (lo, hi) = (0.0, 1.0);
        }
        if hi - lo < 1e-12 {
            let pad = if lo.abs() > 1e-12 { 0.1 * lo.abs() } else { 1.0 };
            lo -= pad;
            hi += pad;
        } else if fixed.is_none() && !log {
            let pad = 0.04 * (hi - lo);
            lo -= pad;
            hi += pad;
        }
        Axis { log, lo, hi, px_lo: px.0, px_hi: px.1 }
    }

    fn px(&self, v: f64) -> Option<f64> {
        if !v.is_finite() || (self.log && v <= 0.0) {
            return None;
        }
        let u = (tr(self.log, v) - self.lo) / (self.hi - self.lo);
        Some(self.px_lo + u * (self.px_hi - self.px_lo))
    }

    fn ticks(&self) -> Vec<(f64, String)> {
        if self.log {
            let (a, b) = (self.lo.ceil() as i32, self.hi.floor() as i32);
            let stride = ((b - a) / 8 + 1).max(1);
            return (a..=b).step_by(stride as usize).map(|k| (10f64.powi(k), format!("1e{k}"))).collect();
        }
        let span = self.hi - self.lo;
        let raw = span / 6.0;
        let mag = 10f64.powf(raw.log10().floor());
        let step = [1.0, 2.0, 5.0, 10.0].iter().map(|m| m * mag).find(|s| *s >= raw).unwrap_or(10.0 * mag);
        let mut out = Vec::new();
        let mut v = (self.lo / step).ceil() * step;
        while v <= self.hi + 1e-9 * step {
            let clean = if v.abs() < 1e-9 * step { 0.0 } else { v };
            out.push((clean, fmt_tick(clean)));
            v += step;
        }
        out
    }
}

fn tr(log: bool, v: f64) -> f64 {
    if log {
        v.log10()
    } else {
        v
    }
}

fn fmt_tick(v: f64) -> String {
    let s = format!("{v:.4}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" {
        "0".to_string()
    } else {
        s.to_string()
    }
}

fn esc(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

impl Plot {
    pub fn new(title: &str, x_label: &str, y_label: &str) -> Self {
        Self { title: title.into(), x_label: x_label.into(), y_label: y_label.into(), ..Default::default() }
    }

    pub fn log_axes(mut self, x: bool, y: bool) -> Self {
        self.log_x = x;
        self.log_y = y;
        self
    }

    pub fn render(&self) -> String {
        let xs = self.series.iter().flat_map(|s| s.points.iter().map(|p| p.0));
        let xs_cells = self.layers.iter().flat_map(|l| l.cells.iter().flat_map(|c| [c[0], c[2]]));
        let x = Axis::fit(self.log_x, xs.chain(xs_cells), self.x_range, (MARGIN_L, WIDTH - MARGIN_R));
        let ys = self.series.iter().flat_map(|s| s.points.iter().map(|p| p.1));
        let ys_cells = self.layers.iter().flat_map(|l| l.cells.iter().flat_map(|c| [c[1], c[3]]));
        let y = Axis::fit(self.log_y, ys.chain(ys_cells), self.y_range, (HEIGHT - MARGIN_B, MARGIN_T));

        let mut o = String::new();
        let _ = writeln!(
            o,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
        );
        let _ = writeln!(o, r#"<rect width="100%" height="100%" fill="white"/>"#);
        let _ = writeln!(o, r#"<text x="{:.1}" y="22" text-anchor="middle" font-size="15">{}</text>"#, WIDTH / 2.0, esc(&self.title));

        for (k, layer) in self.layers.iter().enumerate() {
            let color = PALETTE[k % PALETTE.len()];
            let _ = writeln!(o, r#"<g fill="{color}" fill-opacity="0.25" stroke="none">"#);
            for c in &layer.cells {
                if let (Some(x0), Some(x1), Some(y0), Some(y1)) = (x.px(c[0]), x.px(c[2]), y.px(c[1]), y.px(c[3])) {
                    let _ = writeln!(
                        o,
                        r#"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}"/>"#,
                        x0.min(x1),
                        y0.min(y1),
                        (x1 - x0).abs(),
                        (y1 - y0).abs()
                    );
                }
            }
            let _ = writeln!(o, "</g>");
        }

        let (bx0, bx1, by0, by1) = (MARGIN_L, WIDTH - MARGIN_R, MARGIN_T, HEIGHT - MARGIN_B);
        let _ = writeln!(o, r##"<g stroke="#999" stroke-width="0.5">"##);
        for (v, label) in x.ticks() {
            if let Some(p) = x.px(v) {
                let _ = writeln!(o, r#"<line x1="{p:.2}" y1="{by0:.2}" x2="{p:.2}" y2="{by1:.2}" stroke-dasharray="2,3"/>"#);
                let _ = writeln!(o, r#"<text x="{p:.2}" y="{:.2}" text-anchor="middle" stroke="none" fill="black">{label}</text>"#, by1 + 16.0);
            }
        }
        for (v, label) in y.ticks() {
            if let Some(p) = y.px(v) {
                let _ = writeln!(o, r#"<line x1="{bx0:.2}" y1="{p:.2}" x2="{bx1:.2}" y2="{p:.2}" stroke-dasharray="2,3"/>"#);
                let _ = writeln!(o, r#"<text x="{:.2}" y="{:.2}" text-anchor="end" stroke="none" fill="black">{label}</text>"#, bx0 - 6.0, p + 4.0);
            }
        }
        let _ = writeln!(o, "</g>");
        let _ = writeln!(o, r#"<rect x="{bx0:.2}" y="{by0:.2}" width="{:.2}" height="{:.2}" fill="none" stroke="black"/>"#, bx1 - bx0, by1 - by0);
        let _ = writeln!(o, r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#, (bx0 + bx1) / 2.0, HEIGHT - 14.0, esc(&self.x_label));
        let _ = writeln!(
            o,
            r#"<text x="18" y="{:.2}" text-anchor="middle" transform="rotate(-90 18 {:.2})">{}</text>"#,
            (by0 + by1) / 2.0,
            (by0 + by1) / 2.0,
            esc(&self.y_label)
        );

        for (k, s) in self.series.iter().enumerate() {
            let color = PALETTE[(k + self.layers.len()) % PALETTE.len()];
            let pts: Vec<(usize, f64, f64)> = s
                .points
                .iter()
                .enumerate()
                .filter_map(|(i, &(a, b))| Some((i, x.px(a)?, y.px(b)?)))
                .collect();
            if matches!(s.mark, Mark::Line | Mark::LinePoints) && pts.len() > 1 {
                let path: Vec<String> = pts.iter().map(|(_, a, b)| format!("{a:.2},{b:.2}")).collect();
                let _ = writeln!(o, r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#, path.join(" "));
            }
            if matches!(s.mark, Mark::Points | Mark::LinePoints) {
                let r = if s.mark == Mark::Points { 1.5 } else { 3.0 };
                let _ = writeln!(o, r#"<g fill="{color}">"#);
                for (_, a, b) in &pts {
                    let _ = writeln!(o, r#"<circle cx="{a:.2}" cy="{b:.2}" r="{r}"/>"#);
                }
                let _ = writeln!(o, "</g>");
            }
            for (i, a, b) in &pts {
                if let Some(text) = s.annotations.get(*i) {
                    let _ = writeln!(o, r#"<text x="{:.2}" y="{:.2}" font-size="10" fill="{color}">{}</text>"#, a + 4.0, b - 4.0, esc(text));
                }
            }
        }

        let entries: Vec<&str> = self.layers.iter().map(|l| l.label.as_str()).chain(self.series.iter().map(|s| s.label.as_str())).collect();
        for (k, label) in entries.iter().enumerate() {
            let color = PALETTE[k % PALETTE.len()];
            let ly = by0 + 14.0 + 16.0 * k as f64;
            let _ = writeln!(o, r#"<rect x="{:.2}" y="{:.2}" width="10" height="10" fill="{color}"/>"#, bx1 - 130.0, ly - 9.0);
            let _ = writeln!(o, r#"<text x="{:.2}" y="{ly:.2}">{}</text>"#, bx1 - 115.0, esc(label));
        }
        o.push_str("</svg>\n");
        o
    }
}
