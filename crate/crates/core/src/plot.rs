//! Minimal static SVG charts.
//!
//! Output depends only on the data, so identical runs produce identical
//! files.

use std::fmt::Write;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 400.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 20.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 50.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Style {
    Line,
    /// Horizontal segment per sample, for histograms.
    Step,
}

#[derive(Debug, Clone)]
pub struct Chart<'a> {
    pub title: &'a str,
    pub x_label: &'a str,
    pub y_label: &'a str,
    pub style: Style,
    /// Written into an XML comment at the top of the file.
    pub comment: &'a str,
    /// Optional dashed horizontal reference line.
    pub reference_y: Option<f64>,
}

fn extent(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values
        .filter(|v| v.is_finite())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
    if !lo.is_finite() {
        (0.0, 1.0)
    } else if hi - lo <= 0.0 {
        (lo - 0.5, hi + 0.5)
    } else {
        (lo, hi)
    }
}

/// 1, 2 or 5 times a power of ten, giving about `n` ticks over `span`.
fn tick_step(span: f64, n: f64) -> f64 {
    let raw = span / n;
    let mag = 10f64.powf(raw.log10().floor());
    let norm = raw / mag;
    let nice = if norm < 1.5 {
        1.0
    } else if norm < 3.5 {
        2.0
    } else if norm < 7.5 {
        5.0
    } else {
        10.0
    };
    nice * mag
}

fn fmt_tick(v: f64) -> String {
    if v == 0.0 {
        "0".into()
    } else if v.abs() >= 1e5 || v.abs() < 1e-3 {
        format!("{v:.2e}")
    } else {
        let s = format!("{v:.4}");
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

impl Chart<'_> {
    pub fn render(&self, xs: &[f64], ys: &[f64]) -> String {
        let n = xs.len().min(ys.len());
        let (x0, x1) = extent(xs[..n].iter().copied());
        let (mut y0, mut y1) = extent(ys[..n].iter().copied().chain(self.reference_y));
        if self.style == Style::Step {
            y0 = y0.min(0.0);
        }
        let pad = 0.05 * (y1 - y0);
        y1 += pad;
        if y0 != 0.0 {
            y0 -= pad;
        }
        let pw = WIDTH - LEFT - RIGHT;
        let ph = HEIGHT - TOP - BOTTOM;
        let sx = |x: f64| LEFT + (x - x0) / (x1 - x0) * pw;
        let sy = |y: f64| TOP + (1.0 - (y - y0) / (y1 - y0)) * ph;

        let mut svg = String::new();
        let _ = writeln!(
            svg,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
        );
        let _ = writeln!(svg, "<!-- {} -->", self.comment.replace("--", "- -"));
        let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="24" font-family="sans-serif" font-size="15" text-anchor="middle">{}</text>"#,
            WIDTH / 2.0,
            escape(self.title)
        );
        let _ = writeln!(
            svg,
            r#"<rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#
        );
        let axis = |svg: &mut String, lo: f64, hi: f64, horizontal: bool| {
            let step = tick_step(hi - lo, 6.0);
            let mut k = (lo / step).ceil() as i64;
            while (k as f64) * step <= hi + 1e-9 * step {
                let v = k as f64 * step;
                if horizontal {
                    let x = sx(v);
                    let _ = writeln!(
                        svg,
                        r#"<line x1="{x:.2}" y1="{}" x2="{x:.2}" y2="{}" stroke="black"/><text x="{x:.2}" y="{}" font-family="sans-serif" font-size="11" text-anchor="middle">{}</text>"#,
                        TOP + ph,
                        TOP + ph + 5.0,
                        TOP + ph + 18.0,
                        fmt_tick(v)
                    );
                } else {
                    let y = sy(v);
                    let _ = writeln!(
                        svg,
                        r#"<line x1="{}" y1="{y:.2}" x2="{LEFT}" y2="{y:.2}" stroke="black"/><text x="{}" y="{:.2}" font-family="sans-serif" font-size="11" text-anchor="end">{}</text>"#,
                        LEFT - 5.0,
                        LEFT - 8.0,
                        y + 4.0,
                        fmt_tick(v)
                    );
                }
                k += 1;
            }
        };
        axis(&mut svg, x0, x1, true);
        axis(&mut svg, y0, y1, false);
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="{}" font-family="sans-serif" font-size="12" text-anchor="middle">{}</text>"#,
            LEFT + pw / 2.0,
            HEIGHT - 12.0,
            escape(self.x_label)
        );
        let _ = writeln!(
            svg,
            r#"<text x="16" y="{0}" font-family="sans-serif" font-size="12" text-anchor="middle" transform="rotate(-90 16 {0})">{1}</text>"#,
            TOP + ph / 2.0,
            escape(self.y_label)
        );
        if let Some(r) = self.reference_y {
            let y = sy(r);
            let _ = writeln!(
                svg,
                r#"<line x1="{LEFT}" y1="{y:.2}" x2="{}" y2="{y:.2}" stroke="gray" stroke-dasharray="4 3"/>"#,
                LEFT + pw
            );
        }

        let mut path = String::new();
        let mut pen_up = true;
        for i in 0..n {
            let (x, y) = (xs[i], ys[i]);
            if !x.is_finite() || !y.is_finite() {
                pen_up = true;
                continue;
            }
            let cmd = if pen_up { 'M' } else { 'L' };
            match self.style {
                Style::Line => {
                    let _ = write!(path, "{cmd}{:.2} {:.2} ", sx(x), sy(y));
                }
                Style::Step => {
                    let half = if n > 1 { 0.5 * (x1 - x0) / (n - 1) as f64 } else { 0.5 };
                    let _ = write!(
                        path,
                        "{cmd}{:.2} {:.2} L{:.2} {:.2} ",
                        sx(x - half).max(LEFT),
                        sy(y),
                        sx(x + half).min(LEFT + pw),
                        sy(y)
                    );
                }
            }
            pen_up = false;
        }
        let _ = writeln!(
            svg,
            r#"<path d="{}" fill="none" stroke="steelblue" stroke-width="1"/>"#,
            path.trim_end()
        );
        svg.push_str("</svg>\n");
        svg
    }
}
