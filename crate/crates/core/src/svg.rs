//! Static SVG figures: iso-probability curves over the data, and
//! score-vs-probability calibration plots.

use std::fmt::Write as _;

use crate::calibration::{CalibrationTable, MonotoneMap};
use crate::dataset::{Label, LabeledDataset};
use crate::isocurves::IsoCurveSet;

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 600.0;
const MARGIN: f64 = 60.0;

struct Canvas {
    x: (f64, f64),
    y: (f64, f64),
    out: String,
}

impl Canvas {
    fn new(x: (f64, f64), y: (f64, f64), title: &str) -> Self {
        let mut out = String::new();
        let _ = writeln!(
            out,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="11">"#
        );
        let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
        let _ = writeln!(
            out,
            r#"<text x="{}" y="24" text-anchor="middle" font-size="14">{}</text>"#,
            WIDTH / 2.0,
            escape(title)
        );
        Self { x, y, out }
    }

    fn px(&self, x: f64) -> f64 {
        MARGIN + (x - self.x.0) / (self.x.1 - self.x.0) * (WIDTH - 2.0 * MARGIN)
    }

    fn py(&self, y: f64) -> f64 {
        HEIGHT - MARGIN - (y - self.y.0) / (self.y.1 - self.y.0) * (HEIGHT - 2.0 * MARGIN)
    }

    fn axes(&mut self, x_label: &str, y_label: &str) {
        let (l, r) = (MARGIN, WIDTH - MARGIN);
        let (t, b) = (MARGIN, HEIGHT - MARGIN);
        let _ = writeln!(
            self.out,
            r#"<g class="axes" stroke="black" fill="none"><rect x="{l}" y="{t}" width="{}" height="{}"/></g>"#,
            r - l,
            b - t
        );
        let mut ticks = String::new();
        for v in nice_ticks(self.x.0, self.x.1) {
            let x = self.px(v);
            let _ = write!(
                ticks,
                r#"<line x1="{x:.2}" y1="{b}" x2="{x:.2}" y2="{}" stroke="black"/><text x="{x:.2}" y="{}" text-anchor="middle">{}</text>"#,
                b + 5.0,
                b + 18.0,
                fmt_tick(v)
            );
        }
        for v in nice_ticks(self.y.0, self.y.1) {
            let y = self.py(v);
            let _ = write!(
                ticks,
                r#"<line x1="{}" y1="{y:.2}" x2="{l}" y2="{y:.2}" stroke="black"/><text x="{}" y="{:.2}" text-anchor="end">{}</text>"#,
                l - 5.0,
                l - 8.0,
                y + 4.0,
                fmt_tick(v)
            );
        }
        let _ = writeln!(self.out, r#"<g class="ticks">{ticks}</g>"#);
        let _ = writeln!(
            self.out,
            r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
            WIDTH / 2.0,
            HEIGHT - 18.0,
            escape(x_label)
        );
        let _ = writeln!(
            self.out,
            r#"<text x="18" y="{}" text-anchor="middle" transform="rotate(-90 18 {})">{}</text>"#,
            HEIGHT / 2.0,
            HEIGHT / 2.0,
            escape(y_label)
        );
    }

    fn path(&self, pts: &[[f64; 2]]) -> String {
        let mut d = String::new();
        for (k, p) in pts.iter().enumerate() {
            let _ = write!(
                d,
                "{}{:.2},{:.2}",
                if k == 0 { "M" } else { " L" },
                self.px(p[0]),
                self.py(p[1])
            );
        }
        d
    }

    fn finish(mut self) -> String {
        self.out.push_str("</svg>\n");
        self.out
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn fmt_tick(v: f64) -> String {
    let s = format!("{:.3}", v);
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" { "0".into() } else { s.into() }
}

fn nice_ticks(lo: f64, hi: f64) -> Vec<f64> {
    let span = hi - lo;
    if !(span > 0.0) {
        return vec![lo];
    }
    let raw = span / 6.0;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 5.0, 10.0]
        .into_iter()
        .map(|m| m * mag)
        .find(|s| *s >= raw)
        .unwrap_or(10.0 * mag);
    let first = (lo / step).ceil() as i64;
    let last = (hi / step).floor() as i64;
    (first..=last).map(|k| k as f64 * step).collect()
}

/// Blue (low) to red (high) ramp.
fn level_colour(p: f64) -> String {
    let t = p.clamp(0.0, 1.0);
    let r = (40.0 + 200.0 * t) as u8;
    let b = (240.0 - 200.0 * t) as u8;
    format!("#{r:02x}30{b:02x}")
}

/// Data scatter with one `<g class="isocurve" data-level="…">` group per level,
/// each labelled with its level.
pub fn isocurve_svg(set: &IsoCurveSet, data: Option<&LabeledDataset>, title: &str) -> String {
    let g = &set.grid;
    let mut c = Canvas::new(g.x_range, g.y_range, title);
    c.axes("x1", "x2");

    if let Some(ds) = data.filter(|d| d.dim() == 2) {
        let mut dots = String::new();
        for (p, l) in ds.points().zip(ds.labels()) {
            let (fill, class) = match l {
                Label::Plus => ("#c03030", "plus"),
                Label::Minus => ("#3050c0", "minus"),
            };
            let _ = write!(
                dots,
                r#"<circle class="{class}" cx="{:.2}" cy="{:.2}" r="1.6" fill="{fill}" fill-opacity="0.35"/>"#,
                c.px(p[0]),
                c.py(p[1])
            );
        }
        let _ = writeln!(c.out, r#"<g class="data">{dots}</g>"#);
    }

    for curve in &set.curves {
        let colour = level_colour(curve.level);
        let _ = write!(
            c.out,
            r#"<g class="isocurve" data-level="{}" data-theta="{}" stroke="{colour}" fill="none" stroke-width="1.4">"#,
            curve.level, curve.theta
        );
        for line in &curve.polylines {
            let _ = write!(c.out, r#"<path d="{}"/>"#, c.path(line));
        }
        // Label at the middle vertex of the longest polyline.
        if let Some(line) = curve.polylines.iter().max_by_key(|l| l.len()) {
            if let Some(v) = line.get(line.len() / 2) {
                let _ = write!(
                    c.out,
                    r#"<text class="level-label" x="{:.2}" y="{:.2}" fill="{colour}" stroke="none">{}</text>"#,
                    c.px(v[0]) + 3.0,
                    c.py(v[1]) - 3.0,
                    curve.level
                );
            }
        }
        c.out.push_str("</g>\n");
    }
    c.finish()
}

/// Scatter of `(score, probability)` rows plus the calibrated map as a line.
pub fn calibration_svg(table: &CalibrationTable, map: Option<&MonotoneMap>, title: &str) -> String {
    let scores = table
        .rows
        .iter()
        .map(|r| r.score)
        .chain(map.into_iter().flat_map(|m| m.breakpoints.iter().copied()));
    let (mut lo, mut hi) = scores.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), s| {
        (a.min(s), b.max(s))
    });
    if !(lo < hi) {
        lo = if lo.is_finite() { lo - 1.0 } else { -1.0 };
        hi = lo + 2.0;
    }
    let pad = 0.05 * (hi - lo);
    let mut c = Canvas::new((lo - pad, hi + pad), (0.0, 1.0), title);
    c.axes("raw score", "estimated posterior probability");

    let mut dots = String::new();
    for r in &table.rows {
        let _ = write!(
            dots,
            r##"<circle cx="{:.2}" cy="{:.2}" r="3" fill="#303030"/>"##,
            c.px(r.score),
            c.py(r.probability)
        );
    }
    let _ = writeln!(
        c.out,
        r#"<g class="calibration-points" data-resolution="{}">{dots}</g>"#,
        table.resolution
    );
    if let Some(m) = map {
        let pts: Vec<[f64; 2]> = m
            .breakpoints
            .iter()
            .zip(&m.values)
            .map(|(s, v)| [*s, *v])
            .collect();
        let _ = writeln!(
            c.out,
            r##"<g class="isotonic" stroke="#c03030" fill="none" stroke-width="1.5"><path d="{}"/></g>"##,
            c.path(&pts)
        );
    }
    c.finish()
}
