//! Static SVG 1.1 step plot of survival curves.

use std::fmt::Write;

use hazcause_core::{AdjustedCurve, Arm};

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 400.0;
const LEFT: f64 = 64.0;
const RIGHT: f64 = 24.0;
const TOP: f64 = 24.0;
const BOTTOM: f64 = 56.0;
const COLORS: [&str; 4] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd"];

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SvgError {
    #[error("nothing to plot")]
    EmptyCurve,
    #[error("curve `{0}` has {1} days but {2} survival values")]
    LengthMismatch(String, usize, usize),
}

/// One step curve. `days` ascending; `survival[k]` holds from `days[k]`
/// until the next day.
#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub id: String,
    pub label: String,
    pub dashed: bool,
    pub days: Vec<u64>,
    pub survival: Vec<f64>,
}

impl Series {
    pub fn from_curve(curve: &AdjustedCurve, arm: Arm, variant: &str) -> Series {
        let name = match arm {
            Arm::Control => "control",
            Arm::Treated => "treated",
        };
        Series {
            id: format!("{variant}-{name}"),
            label: format!("{name} ({variant})"),
            dashed: variant != "adjusted",
            days: curve.days.clone(),
            survival: curve.survival[arm.index()].clone(),
        }
    }
}

/// Both arms of both curves, unadjusted dashed.
pub fn analysis_series(unadjusted: &AdjustedCurve, adjusted: &AdjustedCurve) -> Vec<Series> {
    let mut out = Vec::with_capacity(4);
    for (variant, curve) in [("unadjusted", unadjusted), ("adjusted", adjusted)] {
        for arm in Arm::BOTH {
            out.push(Series::from_curve(curve, arm, variant));
        }
    }
    out
}

fn escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            c => out.push(c),
        }
    }
    out
}

fn fmt_num(v: f64) -> String {
    let r = (v * 100.0).round() / 100.0;
    if r == 0.0 {
        "0".into()
    } else {
        r.to_string()
    }
}

pub fn render_svg(series: &[Series]) -> Result<String, SvgError> {
    if series.is_empty() || series.iter().all(|s| s.days.is_empty()) {
        return Err(SvgError::EmptyCurve);
    }
    for s in series {
        if s.days.len() != s.survival.len() {
            return Err(SvgError::LengthMismatch(s.id.clone(), s.days.len(), s.survival.len()));
        }
    }
    let t_max = series.iter().filter_map(|s| s.days.last()).copied().max().unwrap_or(0).max(1) as f64;
    let plot_w = WIDTH - LEFT - RIGHT;
    let plot_h = HEIGHT - TOP - BOTTOM;
    let x = |day: u64| LEFT + plot_w * day as f64 / t_max;
    let y = |s: f64| TOP + plot_h * (1.0 - s.clamp(0.0, 1.0));

    let mut svg = String::new();
    let _ = writeln!(svg, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    );
    let _ = writeln!(svg, r#"<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);

    let (x0, x1, y0, y1) = (LEFT, LEFT + plot_w, TOP + plot_h, TOP);
    let _ = writeln!(svg, r#"<g id="axes" stroke="black" stroke-width="1" fill="none">"#);
    let _ = writeln!(svg, r#"<line x1="{x0}" y1="{y0}" x2="{x1}" y2="{y0}"/>"#);
    let _ = writeln!(svg, r#"<line x1="{x0}" y1="{y0}" x2="{x0}" y2="{y1}"/>"#);
    let _ = writeln!(svg, "</g>");

    let _ = writeln!(svg, r#"<g id="ticks" font-family="sans-serif" font-size="11" fill="black">"#);
    for k in 0..=4 {
        let s = f64::from(k) / 4.0;
        let py = fmt_num(y(s));
        let _ = writeln!(svg, r#"<line x1="{}" y1="{py}" x2="{x0}" y2="{py}" stroke="black"/>"#, x0 - 4.0);
        let _ = writeln!(svg, r#"<text x="{}" y="{py}" text-anchor="end" dominant-baseline="middle">{s}</text>"#, x0 - 7.0);
    }
    for k in 0..=4u64 {
        let day = (t_max as u64).saturating_mul(k) / 4;
        let px = fmt_num(x(day));
        let _ = writeln!(svg, r#"<line x1="{px}" y1="{y0}" x2="{px}" y2="{}" stroke="black"/>"#, y0 + 4.0);
        let _ = writeln!(svg, r#"<text x="{px}" y="{}" text-anchor="middle">{day}</text>"#, y0 + 16.0);
    }
    let _ = writeln!(svg, "</g>");
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="{}" font-family="sans-serif" font-size="13" text-anchor="middle">days</text>"#,
        LEFT + plot_w / 2.0,
        HEIGHT - 14.0
    );
    let _ = writeln!(
        svg,
        r#"<text x="16" y="{0}" font-family="sans-serif" font-size="13" text-anchor="middle" transform="rotate(-90 16 {0})">survival probability</text>"#,
        TOP + plot_h / 2.0
    );

    for (k, s) in series.iter().enumerate() {
        let mut points = String::new();
        for (j, (&day, &surv)) in s.days.iter().zip(&s.survival).enumerate() {
            if j > 0 {
                let prev = s.survival[j - 1];
                let _ = write!(points, " {},{}", fmt_num(x(day)), fmt_num(y(prev)));
            }
            if !points.is_empty() {
                points.push(' ');
            }
            let _ = write!(points, "{},{}", fmt_num(x(day)), fmt_num(y(surv)));
        }
        let dash = if s.dashed { r#" stroke-dasharray="6,4""# } else { "" };
        let _ = writeln!(
            svg,
            r#"<polyline id="{}" class="step" fill="none" stroke="{}" stroke-width="2"{dash} points="{points}"/>"#,
            escape(&s.id),
            COLORS[k % COLORS.len()]
        );
    }

    if series.len() > 1 {
        let _ = writeln!(svg, r#"<g id="legend" font-family="sans-serif" font-size="12">"#);
        for (k, s) in series.iter().enumerate() {
            let ly = TOP + 14.0 + 18.0 * k as f64;
            let lx = x1 - 170.0;
            let dash = if s.dashed { r#" stroke-dasharray="6,4""# } else { "" };
            let _ = writeln!(
                svg,
                r#"<line x1="{lx}" y1="{ly}" x2="{}" y2="{ly}" stroke="{}" stroke-width="2"{dash}/>"#,
                lx + 24.0,
                COLORS[k % COLORS.len()]
            );
            let _ = writeln!(
                svg,
                r#"<text x="{}" y="{ly}" dominant-baseline="middle">{}</text>"#,
                lx + 30.0,
                escape(&s.label)
            );
        }
        let _ = writeln!(svg, "</g>");
    }
    svg.push_str("</svg>\n");
    Ok(svg)
}
