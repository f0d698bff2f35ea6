//! Self-contained SVG line charts of a trace.

use std::fmt::Write as _;

use super::trace::TraceRow;

const WIDTH: f64 = 900.0;
const PANEL_HEIGHT: f64 = 240.0;
const MARGIN_LEFT: f64 = 70.0;
const MARGIN_RIGHT: f64 = 150.0;
const MARGIN_TOP: f64 = 30.0;
const MARGIN_BOTTOM: f64 = 40.0;
/// Series are decimated to at most this many points.
const MAX_POINTS: usize = 2000;

struct Series<'a> {
    label: &'a str,
    color: &'a str,
    values: Vec<f64>,
}

struct Panel<'a> {
    title: &'a str,
    unit: &'a str,
    series: Vec<Series<'a>>,
}

fn nice_range(lo: f64, hi: f64) -> (f64, f64) {
    if !(lo.is_finite() && hi.is_finite()) {
        return (-1.0, 1.0);
    }
    if (hi - lo).abs() < 1e-12 {
        let pad = lo.abs().max(1.0) * 0.05;
        return (lo - pad, hi + pad);
    }
    let pad = 0.05 * (hi - lo);
    (lo - pad, hi + pad)
}

fn render_panel(svg: &mut String, panel: &Panel, t: &[f64], top: f64) {
    let plot_w = WIDTH - MARGIN_LEFT - MARGIN_RIGHT;
    let plot_h = PANEL_HEIGHT - MARGIN_TOP - MARGIN_BOTTOM;
    let y0 = top + MARGIN_TOP;
    let (t_lo, t_hi) = (t.first().copied().unwrap_or(0.0), t.last().copied().unwrap_or(1.0));
    let t_span = if t_hi > t_lo { t_hi - t_lo } else { 1.0 };
    let all = panel.series.iter().flat_map(|s| s.values.iter().copied()).filter(|v| v.is_finite());
    let (lo, hi) = all.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    let (lo, hi) = nice_range(lo, hi);
    let sx = |tv: f64| MARGIN_LEFT + (tv - t_lo) / t_span * plot_w;
    let sy = |v: f64| y0 + plot_h - (v - lo) / (hi - lo) * plot_h;

    let _ = writeln!(
        svg,
        r##"<rect x="{MARGIN_LEFT}" y="{y0}" width="{plot_w}" height="{plot_h}" fill="none" stroke="#888"/>"##
    );
    let _ = writeln!(
        svg,
        r#"<text x="{MARGIN_LEFT}" y="{:.1}" font-size="14" font-family="sans-serif">{} [{}]</text>"#,
        y0 - 8.0,
        panel.title,
        panel.unit
    );
    for k in 0..=4 {
        let frac = k as f64 / 4.0;
        let v = lo + frac * (hi - lo);
        let tv = t_lo + frac * t_span;
        let _ = writeln!(
            svg,
            r#"<text x="{:.1}" y="{:.1}" font-size="11" font-family="sans-serif" text-anchor="end">{:.3}</text>"#,
            MARGIN_LEFT - 6.0,
            sy(v) + 4.0,
            v
        );
        let _ = writeln!(
            svg,
            r#"<text x="{:.1}" y="{:.1}" font-size="11" font-family="sans-serif" text-anchor="middle">{:.1}</text>"#,
            sx(tv),
            y0 + plot_h + 16.0,
            tv
        );
    }
    let stride = t.len().div_ceil(MAX_POINTS).max(1);
    for (idx, s) in panel.series.iter().enumerate() {
        let mut points = String::new();
        for (i, (&tv, &v)) in t.iter().zip(&s.values).enumerate() {
            if (i % stride == 0 || i + 1 == t.len()) && v.is_finite() {
                let _ = write!(points, "{:.2},{:.2} ", sx(tv), sy(v));
            }
        }
        let _ = writeln!(
            svg,
            r#"<polyline fill="none" stroke="{}" stroke-width="1.4" points="{}"/>"#,
            s.color,
            points.trim_end()
        );
        let ly = y0 + 14.0 + 18.0 * idx as f64;
        let lx = WIDTH - MARGIN_RIGHT + 12.0;
        let _ = writeln!(
            svg,
            r#"<line x1="{lx}" y1="{:.1}" x2="{:.1}" y2="{:.1}" stroke="{}" stroke-width="2"/><text x="{:.1}" y="{:.1}" font-size="12" font-family="sans-serif">{}</text>"#,
            ly - 4.0,
            lx + 18.0,
            ly - 4.0,
            s.color,
            lx + 24.0,
            ly,
            s.label
        );
    }
}

/// Gap, leader position bounds and attack estimate, stacked vertically.
pub fn render_svg(rows: &[TraceRow]) -> String {
    let t: Vec<f64> = rows.iter().map(|r| r.t).collect();
    let col = |f: fn(&TraceRow) -> f64| rows.iter().map(f).collect::<Vec<f64>>();
    let panels = [
        Panel {
            title: "Inter-vehicle gap",
            unit: "m",
            series: vec![Series { label: "gap", color: "#1f77b4", values: col(|r| r.gap) }],
        },
        Panel {
            title: "Leader position estimate",
            unit: "m",
            series: vec![
                Series { label: "lower", color: "#2ca02c", values: col(|r| r.x_lo) },
                Series { label: "upper", color: "#d62728", values: col(|r| r.x_hi) },
                Series { label: "midpoint", color: "#9467bd", values: col(|r| r.x_hat) },
                Series { label: "true", color: "#000000", values: col(|r| r.leader_x) },
            ],
        },
        Panel {
            title: "Attack and estimate",
            unit: "input",
            series: vec![
                Series { label: "f", color: "#000000", values: col(|r| r.f) },
                Series { label: "f_hat", color: "#ff7f0e", values: col(|r| r.f_hat) },
            ],
        },
    ];
    let height = PANEL_HEIGHT * panels.len() as f64;
    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{height}" viewBox="0 0 {WIDTH} {height}">"#
    );
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);
    for (k, panel) in panels.iter().enumerate() {
        render_panel(&mut svg, panel, &t, k as f64 * PANEL_HEIGHT);
    }
    svg.push_str("</svg>\n");
    svg
}
