//! Minimal SVG scatter plot with an optional fitted curve.

use std::fmt::Write;

use crate::fitting::FitResult;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 440.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 24.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 60.0;
const CURVE_SAMPLES: usize = 120;

#[derive(Debug, Clone, PartialEq)]
pub struct PlotSpec<'a> {
    pub title: &'a str,
    pub x_label: &'a str,
    pub y_label: &'a str,
    pub log_y: bool,
}

/// Tick step of 1, 2 or 5 times a power of ten giving about `target` ticks.
fn nice_step(span: f64, target: f64) -> f64 {
    let raw = span / target;
    let mag = 10f64.powf(raw.log10().floor());
    let frac = raw / mag;
    let nice = if frac <= 1.0 {
        1.0
    } else if frac <= 2.0 {
        2.0
    } else if frac <= 5.0 {
        5.0
    } else {
        10.0
    };
    nice * mag
}

fn fmt_tick(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    let a = v.abs();
    if (1e-3..1e5).contains(&a) {
        let s = format!("{v:.3}");
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        format!("{v:.0e}")
    }
}

struct Axis {
    lo: f64,
    hi: f64,
    log: bool,
}

impl Axis {
    fn t(&self, v: f64) -> f64 {
        let (v, lo, hi) = if self.log {
            (v.log10(), self.lo.log10(), self.hi.log10())
        } else {
            (v, self.lo, self.hi)
        };
        (v - lo) / (hi - lo)
    }

    fn ticks(&self) -> Vec<f64> {
        if self.log {
            let a = self.lo.log10().floor() as i32;
            let b = self.hi.log10().ceil() as i32;
            return (a..=b).map(|e| 10f64.powi(e)).collect();
        }
        let step = nice_step(self.hi - self.lo, 6.0);
        let first = (self.lo / step).ceil() as i64;
        let last = (self.hi / step).floor() as i64;
        (first..=last).map(|i| i as f64 * step).collect()
    }
}

fn padded_axis(values: &[f64], log: bool) -> Axis {
    let (mut lo, mut hi) = values
        .iter()
        .filter(|v| v.is_finite() && (!log || **v > 0.0))
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
            (lo.min(v), hi.max(v))
        });
    if !lo.is_finite() {
        (lo, hi) = if log { (1.0, 10.0) } else { (0.0, 1.0) };
    }
    if log {
        lo = 10f64.powf(lo.log10().floor());
        hi = 10f64.powf(hi.log10().ceil());
        if hi <= lo {
            hi = lo * 10.0;
        }
    } else {
        if hi <= lo {
            lo -= 0.5;
            hi += 0.5;
        }
        let step = nice_step(hi - lo, 6.0);
        lo = (lo / step).floor() * step;
        hi = (hi / step).ceil() * step;
    }
    Axis { lo, hi, log }
}

/// Renders `points` as markers and, when given, the fit as a polyline.
pub fn scaling_svg(points: &[(f64, f64)], fit: Option<&FitResult>, spec: &PlotSpec<'_>) -> String {
    let xs: Vec<f64> = points.iter().map(|p| p.0).collect();
    let x_lo = xs.iter().copied().fold(f64::INFINITY, f64::min);
    let x_hi = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let (x_lo, x_hi) = if x_lo.is_finite() {
        (x_lo, x_hi)
    } else {
        (0.0, 1.0)
    };

    let curve: Vec<(f64, f64)> = match fit {
        Some(f) if x_hi > x_lo => (0..=CURVE_SAMPLES)
            .map(|i| {
                let x = x_lo + (x_hi - x_lo) * i as f64 / CURVE_SAMPLES as f64;
                (x, f.predict(x))
            })
            .filter(|&(_, y)| y.is_finite() && (!spec.log_y || y > 0.0))
            .collect(),
        _ => Vec::new(),
    };

    let x_axis = padded_axis(&[x_lo - 0.5, x_hi + 0.5], false);
    let all_y: Vec<f64> = points
        .iter()
        .map(|p| p.1)
        .chain(curve.iter().map(|p| p.1))
        .collect();
    let y_axis = padded_axis(&all_y, spec.log_y);

    let plot_w = WIDTH - LEFT - RIGHT;
    let plot_h = HEIGHT - TOP - BOTTOM;
    let px = |x: f64| LEFT + x_axis.t(x) * plot_w;
    let py = |y: f64| TOP + (1.0 - y_axis.t(y)) * plot_h;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, "<!-- hamforge {} -->", env!("CARGO_PKG_VERSION"));
    let _ = writeln!(
        s,
        r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#
    );
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="24" text-anchor="middle" font-size="15">{}</text>"#,
        LEFT + plot_w / 2.0,
        escape(spec.title)
    );

    for t in x_axis.ticks() {
        let x = px(t);
        let _ = writeln!(
            s,
            r##"<line x1="{x:.2}" y1="{TOP:.2}" x2="{x:.2}" y2="{:.2}" stroke="#e4e4e4"/>"##,
            TOP + plot_h
        );
        let _ = writeln!(
            s,
            r#"<text x="{x:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            TOP + plot_h + 18.0,
            fmt_tick(t)
        );
    }
    for t in y_axis.ticks() {
        let y = py(t);
        let _ = writeln!(
            s,
            r##"<line x1="{LEFT:.2}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="#e4e4e4"/>"##,
            LEFT + plot_w
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#,
            LEFT - 8.0,
            y + 4.0,
            fmt_tick(t)
        );
    }
    let _ = writeln!(
        s,
        r#"<rect x="{LEFT:.2}" y="{TOP:.2}" width="{plot_w:.2}" height="{plot_h:.2}" fill="none" stroke="black"/>"#
    );
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
        LEFT + plot_w / 2.0,
        HEIGHT - 16.0,
        escape(spec.x_label)
    );
    let _ = writeln!(
        s,
        r#"<text x="20" y="{:.2}" text-anchor="middle" transform="rotate(-90 20 {:.2})">{}</text>"#,
        TOP + plot_h / 2.0,
        TOP + plot_h / 2.0,
        escape(spec.y_label)
    );

    if curve.len() > 1 {
        let path: Vec<String> = curve
            .iter()
            .map(|&(x, y)| format!("{:.2},{:.2}", px(x), py(y)))
            .collect();
        let _ = writeln!(
            s,
            r##"<polyline points="{}" fill="none" stroke="#d62728" stroke-width="1.5"/>"##,
            path.join(" ")
        );
    }
    for &(x, y) in points {
        if !y.is_finite() || (spec.log_y && y <= 0.0) {
            continue;
        }
        let _ = writeln!(
            s,
            r##"<circle cx="{:.2}" cy="{:.2}" r="4" fill="#1f77b4"/>"##,
            px(x),
            py(y)
        );
    }
    if let Some(f) = fit {
        let p = f.params;
        let label = match f.model {
            crate::fitting::Model::Exponential => {
                format!("fit: y = {:.4} exp({:.4} n) + {:.4}", p[0], p[1], p[2])
            }
            crate::fitting::Model::Quadratic => {
                format!("fit: y = {:.4} n^2 + {:.4} n + {:.4}", p[0], p[1], p[2])
            }
        };
        let _ = writeln!(
            s,
            r##"<text x="{:.2}" y="{:.2}" fill="#d62728">{}</text>"##,
            LEFT + 10.0,
            TOP + 18.0,
            escape(&label)
        );
    }
    s.push_str("</svg>\n");
    s
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fitting::{fit_quadratic, ScalingSeries};

    #[test]
    fn renders_points_and_curve() {
        let pts: Vec<(u32, f64)> = (1..=6).map(|n| (n, (n * n) as f64 + 1.0)).collect();
        let fit = fit_quadratic(&ScalingSeries::new(pts.clone()).unwrap()).unwrap();
        let xy: Vec<(f64, f64)> = pts.iter().map(|&(n, y)| (n as f64, y)).collect();
        let spec = PlotSpec {
            title: "t",
            x_label: "n",
            y_label: "y",
            log_y: false,
        };
        let svg = scaling_svg(&xy, Some(&fit), &spec);
        assert_eq!(svg.matches("<circle").count(), 6);
        assert!(svg.contains("<polyline"));
        assert!(svg.ends_with("</svg>\n"));
        assert_eq!(svg, scaling_svg(&xy, Some(&fit), &spec));
    }

    #[test]
    fn log_axis_uses_decades() {
        let axis = padded_axis(&[3.0, 450.0], true);
        assert_eq!((axis.lo, axis.hi), (1.0, 1000.0));
        assert_eq!(axis.ticks(), vec![1.0, 10.0, 100.0, 1000.0]);
        assert!((axis.t(10.0) - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn nice_steps() {
        assert_eq!(nice_step(10.0, 5.0), 2.0);
        assert_eq!(nice_step(0.7, 6.0), 0.2);
        assert_eq!(fmt_tick(2.5), "2.5");
        assert_eq!(fmt_tick(1e6), "1e6");
    }
}
