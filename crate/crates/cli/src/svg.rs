//! Self-contained SVG rendering of experiment plots.

use std::fmt::Write;

use coda_lab::experiments::{Plot, Series};

const W: f64 = 720.0;
const H: f64 = 480.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 160.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 60.0;
const COLORS: [&str; 8] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf", "#8c564b", "#e377c2"];

struct Axis {
    lo: f64,
    hi: f64,
    log: bool,
}

impl Axis {
    fn new(values: impl Iterator<Item = f64>, log: bool) -> Self {
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
            (lo, hi) = (lo.floor(), hi.ceil());
        }
        if hi - lo < 1e-12 {
            (lo, hi) = (lo - 0.5, hi + 0.5);
        }
        Self { lo, hi, log }
    }

    /// Position in `[0, 1]`, `None` for values a log axis cannot show.
    fn frac(&self, v: f64) -> Option<f64> {
        let v = if self.log {
            if v <= 0.0 {
                return None;
            }
            v.log10()
        } else {
            v
        };
        v.is_finite().then(|| (v - self.lo) / (self.hi - self.lo))
    }

    fn ticks(&self) -> Vec<(f64, String)> {
        if self.log {
            let step = ((self.hi - self.lo) / 8.0).ceil().max(1.0) as i64;
            (self.lo as i64..=self.hi as i64)
                .step_by(step as usize)
                .map(|e| (10f64.powi(e as i32), format!("1e{e}")))
                .collect()
        } else {
            let raw = (self.hi - self.lo) / 5.0;
            let mag = 10f64.powf(raw.log10().floor());
            let step = [1.0, 2.0, 5.0, 10.0].iter().map(|m| m * mag).find(|s| *s >= raw).unwrap_or(10.0 * mag);
            let mut t = (self.lo / step).ceil() * step;
            let mut out = Vec::new();
            while t <= self.hi + 1e-9 * step {
                out.push((t, format!("{}", (t / step).round() * step)));
                t += step;
            }
            out
        }
    }
}

fn esc(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn frame(out: &mut String, title: &str, x_label: &str, y_label: &str, x: &Axis, y: &Axis) {
    let (pw, ph) = (W - LEFT - RIGHT, H - TOP - BOTTOM);
    let _ = write!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">"#
    );
    let _ = write!(out, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = write!(out, r#"<text x="{}" y="24" text-anchor="middle" font-size="15">{}</text>"#, LEFT + pw / 2.0, esc(title));
    let _ = write!(out, r##"<rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}" fill="none" stroke="#333"/>"##);
    for (v, label) in x.ticks() {
        if let Some(f) = x.frac(v) {
            let px = LEFT + f * pw;
            let _ = write!(out, r##"<line x1="{px:.2}" y1="{TOP}" x2="{px:.2}" y2="{}" stroke="#ddd"/>"##, TOP + ph);
            let _ = write!(out, r#"<text x="{px:.2}" y="{}" text-anchor="middle">{label}</text>"#, TOP + ph + 16.0);
        }
    }
    for (v, label) in y.ticks() {
        if let Some(f) = y.frac(v) {
            let py = TOP + (1.0 - f) * ph;
            let _ = write!(out, r##"<line x1="{LEFT}" y1="{py:.2}" x2="{}" y2="{py:.2}" stroke="#ddd"/>"##, LEFT + pw);
            let _ = write!(out, r#"<text x="{}" y="{:.2}" text-anchor="end">{label}</text>"#, LEFT - 6.0, py + 4.0);
        }
    }
    let _ = write!(out, r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#, LEFT + pw / 2.0, H - 16.0, esc(x_label));
    let _ = write!(
        out,
        r#"<text x="18" y="{0}" text-anchor="middle" transform="rotate(-90 18 {0})">{1}</text>"#,
        TOP + ph / 2.0,
        esc(y_label)
    );
}

fn lines(out: &mut String, series: &[Series], x: &Axis, y: &Axis) {
    let (pw, ph) = (W - LEFT - RIGHT, H - TOP - BOTTOM);
    for (i, s) in series.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        let pts: Vec<String> = s
            .points
            .iter()
            .filter_map(|&(a, b)| Some((x.frac(a)?, y.frac(b)?)))
            .map(|(fx, fy)| format!("{:.2},{:.2}", LEFT + fx * pw, TOP + (1.0 - fy) * ph))
            .collect();
        let _ = write!(out, r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="1.5"/>"#, pts.join(" "));
        for p in &pts {
            let (cx, cy) = p.split_once(',').unwrap_or(("0", "0"));
            let _ = write!(out, r#"<circle cx="{cx}" cy="{cy}" r="2.5" fill="{color}"/>"#);
        }
        if i < 20 {
            let ly = TOP + 14.0 + 16.0 * i as f64;
            let lx = W - RIGHT + 12.0;
            let _ = write!(out, r#"<line x1="{lx}" y1="{ly}" x2="{}" y2="{ly}" stroke="{color}" stroke-width="2"/>"#, lx + 18.0);
            let _ = write!(out, r#"<text x="{}" y="{}">{}</text>"#, lx + 24.0, ly + 4.0, esc(&s.name));
        }
    }
}

pub fn render(plot: &Plot) -> String {
    let mut out = String::new();
    match plot {
        Plot::Lines { title, x_label, y_label, log_x, log_y, series } => {
            let x = Axis::new(series.iter().flat_map(|s| s.points.iter().map(|p| p.0)), *log_x);
            let y = Axis::new(series.iter().flat_map(|s| s.points.iter().map(|p| p.1)), *log_y);
            frame(&mut out, title, x_label, y_label, &x, &y);
            lines(&mut out, series, &x, &y);
        }
        Plot::Histogram { title, x_label, edges, counts } => {
            let x = Axis::new(edges.iter().copied(), false);
            let y = Axis::new(counts.iter().copied().chain([0.0]), false);
            frame(&mut out, title, x_label, "count", &x, &y);
            let (pw, ph) = (W - LEFT - RIGHT, H - TOP - BOTTOM);
            for (i, &c) in counts.iter().enumerate() {
                let (Some(a), Some(b), Some(fy), Some(f0)) = (x.frac(edges[i]), x.frac(edges[i + 1]), y.frac(c), y.frac(0.0))
                else {
                    continue;
                };
                let (top, base) = (TOP + (1.0 - fy) * ph, TOP + (1.0 - f0) * ph);
                let _ = write!(
                    out,
                    r##"<rect x="{:.2}" y="{top:.2}" width="{:.2}" height="{:.2}" fill="#1f77b4" stroke="white"/>"##,
                    LEFT + a * pw,
                    (b - a) * pw,
                    base - top
                );
            }
        }
    }
    out.push_str("</svg>\n");
    out
}
