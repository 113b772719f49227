//! Self-contained SVG log-log plot of a convergence study.

use std::fmt::Write;

use crate::analysis::ConvergenceReport;

const W: f64 = 640.0;
const H: f64 = 480.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 160.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 60.0;

struct Axes {
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
}

impl Axes {
    fn px(&self, h: f64) -> f64 {
        LEFT + (h.log10() - self.x0) / (self.x1 - self.x0) * (W - LEFT - RIGHT)
    }
    fn py(&self, e: f64) -> f64 {
        H - BOTTOM - (e.log10() - self.y0) / (self.y1 - self.y0) * (H - TOP - BOTTOM)
    }
}

fn decade_bounds(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values
        .filter(|v| *v > 0.0 && v.is_finite())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v.log10()), b.max(v.log10())));
    if !lo.is_finite() {
        return (-1.0, 0.0);
    }
    let (lo, hi) = (lo.floor(), hi.ceil());
    if hi > lo {
        (lo, hi)
    } else {
        (lo, lo + 1.0)
    }
}

/// Errors in L2 and broken H1 against `h`, with slope-1 and slope-2 reference triangles.
pub fn loglog_svg(report: &ConvergenceReport, title: &str) -> String {
    let hs: Vec<f64> = report.levels.iter().map(|l| l.h).collect();
    let l2: Vec<f64> = report.levels.iter().map(|l| l.errors.l2).collect();
    let h1: Vec<f64> = report.levels.iter().map(|l| l.errors.h1_broken).collect();
    let (x0, x1) = decade_bounds(hs.iter().copied());
    let (y0, y1) = decade_bounds(l2.iter().chain(&h1).copied());
    let ax = Axes { x0, x1, y0, y1 };

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{}" y="24" text-anchor="middle" font-size="14">{}</text>"#,
        (LEFT + W - RIGHT) / 2.0,
        escape(title)
    );
    // grid and ticks
    for d in x0 as i32..=x1 as i32 {
        let x = ax.px(10f64.powi(d));
        let _ = writeln!(s, r##"<line x1="{x:.2}" y1="{TOP}" x2="{x:.2}" y2="{}" stroke="#ddd"/>"##, H - BOTTOM);
        let _ = writeln!(s, r#"<text x="{x:.2}" y="{}" text-anchor="middle">1e{d}</text>"#, H - BOTTOM + 18.0);
    }
    for d in y0 as i32..=y1 as i32 {
        let y = ax.py(10f64.powi(d));
        let _ = writeln!(s, r##"<line x1="{LEFT}" y1="{y:.2}" x2="{}" y2="{y:.2}" stroke="#ddd"/>"##, W - RIGHT);
        let _ = writeln!(s, r#"<text x="{}" y="{:.2}" text-anchor="end">1e{d}</text>"#, LEFT - 6.0, y + 4.0);
    }
    let _ = writeln!(
        s,
        r#"<rect x="{LEFT}" y="{TOP}" width="{}" height="{}" fill="none" stroke="black"/>"#,
        W - LEFT - RIGHT,
        H - TOP - BOTTOM
    );
    let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle">h</text>"#, (LEFT + W - RIGHT) / 2.0, H - 16.0);
    let _ = writeln!(
        s,
        r#"<text x="20" y="{}" text-anchor="middle" transform="rotate(-90 20 {})">error</text>"#,
        H / 2.0,
        H / 2.0
    );

    let series = [("L2 error", &l2, "#1f77b4"), ("H1 error", &h1, "#d62728")];
    for (name, e, color) in series {
        let pts: Vec<String> = hs
            .iter()
            .zip(e.iter())
            .filter(|(_, e)| **e > 0.0 && e.is_finite())
            .map(|(&h, &e)| format!("{:.2},{:.2}", ax.px(h), ax.py(e)))
            .collect();
        let _ = writeln!(
            s,
            r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="2"><title>{name}</title></polyline>"#,
            pts.join(" ")
        );
        for p in &pts {
            let (x, y) = p.split_once(',').unwrap();
            let _ = writeln!(s, r#"<circle cx="{x}" cy="{y}" r="3.5" fill="{color}"/>"#);
        }
    }

    // Reference triangles below the finest-level points.
    if let (Some(&hmin), Some(&hmax)) = (hs.last(), hs.first()) {
        let ha = hmin;
        let hb = (hmin * hmax).sqrt().max(hmin * 2.0).min(hmax);
        for (slope, anchor, label) in [(1.0, h1.last(), "slope 1"), (2.0, l2.last(), "slope 2")] {
            let Some(&ea) = anchor else { continue };
            if !(ea > 0.0 && ea.is_finite()) || hb <= ha {
                continue;
            }
            let ea = ea / 3.0;
            let eb = ea * (hb / ha).powf(slope);
            let (xa, ya, xb, yb) = (ax.px(ha), ax.py(ea), ax.px(hb), ax.py(eb));
            let _ = writeln!(
                s,
                r#"<path d="M {xa:.2} {ya:.2} L {xb:.2} {yb:.2} L {xb:.2} {ya:.2} Z" fill="none" stroke="black" stroke-dasharray="4 3"/>"#
            );
            let _ = writeln!(s, r#"<text x="{:.2}" y="{:.2}">{label}</text>"#, xb + 4.0, (ya + yb) / 2.0);
        }
    }

    let lx = W - RIGHT + 12.0;
    for (i, (name, _, color)) in series.iter().enumerate() {
        let y = TOP + 16.0 + 20.0 * i as f64;
        let _ = writeln!(
            s,
            r#"<line x1="{lx}" y1="{y}" x2="{}" y2="{y}" stroke="{color}" stroke-width="2"/>"#,
            lx + 24.0
        );
        let _ = writeln!(s, r#"<text x="{}" y="{}">{name}</text>"#, lx + 30.0, y + 4.0);
    }
    for (i, (name, r)) in [("L2 rate", report.fitted.l2), ("H1 rate", report.fitted.h1)].iter().enumerate() {
        let y = TOP + 70.0 + 18.0 * i as f64;
        let txt = r.map_or("n/a".to_string(), |r| format!("{r:.4}"));
        let _ = writeln!(s, r#"<text x="{lx}" y="{y}">{name}: {txt}</text>"#);
    }
    s.push_str("</svg>\n");
    s
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::{fit_rates, ErrorTriple, Level};

    #[test]
    fn svg_has_series_and_references() {
        let levels = [0.1, 0.05, 0.025]
            .iter()
            .map(|&h| Level {
                h,
                cells: 1,
                dofs: 3,
                errors: ErrorTriple {
                    l2: h * h,
                    h1_broken: h,
                    energy: h,
                },
                iterations: 1,
            })
            .collect();
        let r = fit_rates(levels).unwrap();
        let svg = loglog_svg(&r, "test <1>");
        assert!(svg.starts_with("<svg"));
        assert!(svg.trim_end().ends_with("</svg>"));
        assert_eq!(svg.matches("<polyline").count(), 2);
        assert!(svg.contains("slope 1") && svg.contains("slope 2"));
        assert!(svg.contains("test &lt;1&gt;"));
        assert!(svg.contains("L2 rate: 2.0000"));
    }
}
