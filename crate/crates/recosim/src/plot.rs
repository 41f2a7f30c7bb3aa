//! SVG line charts of sweep reports.
//!
//! One series per agent: pooled CTR over repetitions with a shaded Wilson
//! band. When oracle rows are present every series is divided by the oracle
//! CTR at the same grid value. Output depends only on the input rows.

use std::fmt::Write as _;

use thiserror::Error;

use crate::eval::{CtrReport, ORACLE_LABEL};
use crate::io::ReportRow;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 400.0;
const MARGIN_LEFT: f64 = 70.0;
const MARGIN_RIGHT: f64 = 150.0;
const MARGIN_Y: f64 = 40.0;
const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"];

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PlotError {
    #[error("report has no rows to plot")]
    NoData,
    #[error("row for agent `{0}` has no axis value")]
    MissingAxisValue(String),
}

/// A plotted series: `(x, y, low, high)` per grid value.
#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub agent: String,
    pub points: Vec<(f64, f64, f64, f64)>,
}

/// Pools repetitions and, if oracle rows exist, normalizes by the oracle.
pub fn series_from_rows(rows: &[ReportRow], z: f64) -> Result<(Vec<Series>, bool), PlotError> {
    if rows.is_empty() {
        return Err(PlotError::NoData);
    }
    let mut xs: Vec<f64> = Vec::new();
    let mut agents: Vec<&str> = Vec::new();
    for r in rows {
        let x = r.axis_value.ok_or_else(|| PlotError::MissingAxisValue(r.agent.clone()))?;
        if !xs.contains(&x) {
            xs.push(x);
        }
        if !agents.contains(&r.agent.as_str()) {
            agents.push(&r.agent);
        }
    }
    xs.sort_by(f64::total_cmp);
    let pooled = |x: f64, agent: &str| -> Option<CtrReport> {
        let reports: Vec<&CtrReport> =
            rows.iter().filter(|r| r.axis_value == Some(x) && r.agent == agent).map(|r| &r.report).collect();
        CtrReport::pooled(reports, z).ok()
    };
    let normalize = agents.contains(&ORACLE_LABEL);
    let series = agents
        .iter()
        .filter(|a| !(normalize && **a == ORACLE_LABEL))
        .map(|agent| {
            let points = xs
                .iter()
                .filter_map(|&x| {
                    let r = pooled(x, agent)?;
                    let scale = if normalize { pooled(x, ORACLE_LABEL)?.ctr } else { 1.0 };
                    Some((x, r.ctr / scale, r.ci_low / scale, r.ci_high / scale))
                })
                .collect();
            Series { agent: agent.to_string(), points }
        })
        .collect();
    Ok((series, normalize))
}

/// Renders a report as an SVG document.
pub fn render_svg(rows: &[ReportRow], x_label: &str, z: f64) -> Result<String, PlotError> {
    let (series, normalized) = series_from_rows(rows, z)?;
    let all: Vec<&(f64, f64, f64, f64)> = series.iter().flat_map(|s| &s.points).collect();
    if all.is_empty() {
        return Err(PlotError::NoData);
    }
    let x_min = all.iter().map(|p| p.0).fold(f64::INFINITY, f64::min);
    let x_max = all.iter().map(|p| p.0).fold(f64::NEG_INFINITY, f64::max);
    let log_x = x_min > 0.0 && x_max / x_min >= 100.0;
    let tx = |x: f64| if log_x { x.log10() } else { x };
    let (lo_x, hi_x) = (tx(x_min), tx(x_max));
    let y_max = all.iter().map(|p| p.3).fold(0.0, f64::max) * 1.05;
    let y_max = if y_max > 0.0 { y_max } else { 1.0 };

    let plot_w = WIDTH - MARGIN_LEFT - MARGIN_RIGHT;
    let plot_h = HEIGHT - 2.0 * MARGIN_Y;
    let px = |x: f64| {
        let span = hi_x - lo_x;
        let frac = if span > 0.0 { (tx(x) - lo_x) / span } else { 0.5 };
        MARGIN_LEFT + frac * plot_w
    };
    let py = |y: f64| MARGIN_Y + plot_h * (1.0 - y / y_max);

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(svg, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let (x0, x1, y0, y1) = (MARGIN_LEFT, MARGIN_LEFT + plot_w, MARGIN_Y, MARGIN_Y + plot_h);
    let _ = writeln!(svg, r#"<path d="M{x0:.2} {y0:.2} L{x0:.2} {y1:.2} L{x1:.2} {y1:.2}" stroke="black" fill="none"/>"#);

    for i in 0..=4 {
        let y = y_max * f64::from(i) / 4.0;
        let _ = writeln!(
            svg,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{y:.4}</text>"#,
            MARGIN_LEFT - 6.0,
            py(y) + 4.0
        );
    }
    let mut ticks: Vec<f64> = all.iter().map(|p| p.0).collect();
    ticks.sort_by(f64::total_cmp);
    ticks.dedup();
    for x in ticks {
        let _ = writeln!(svg, r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{x}</text>"#, px(x), y1 + 16.0);
    }
    let y_label = if normalized { "CTR / oracle CTR" } else { "CTR" };
    let x_label = if log_x { format!("{x_label} (log scale)") } else { x_label.to_string() };
    let _ = writeln!(svg, r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#, x0 + plot_w / 2.0, HEIGHT - 6.0, escape(&x_label));
    let _ = writeln!(svg, r#"<text x="14" y="{:.2}" transform="rotate(-90 14 {:.2})" text-anchor="middle">{y_label}</text>"#, y0 + plot_h / 2.0, y0 + plot_h / 2.0);

    for (i, s) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        if s.points.is_empty() {
            continue;
        }
        let mut band = String::new();
        for (j, p) in s.points.iter().enumerate() {
            let _ = write!(band, "{}{:.2} {:.2} ", if j == 0 { "M" } else { "L" }, px(p.0), py(p.3));
        }
        for p in s.points.iter().rev() {
            let _ = write!(band, "L{:.2} {:.2} ", px(p.0), py(p.2));
        }
        let _ = writeln!(svg, r#"<path d="{}Z" fill="{color}" fill-opacity="0.2" stroke="none"/>"#, band.trim_end());
        let line: Vec<String> = s.points.iter().map(|p| format!("{:.2},{:.2}", px(p.0), py(p.1))).collect();
        let _ = writeln!(svg, r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="2"/>"#, line.join(" "));
        let ly = MARGIN_Y + 18.0 * i as f64;
        let _ = writeln!(svg, r#"<line x1="{:.2}" y1="{ly:.2}" x2="{:.2}" y2="{ly:.2}" stroke="{color}" stroke-width="2"/>"#, x1 + 10.0, x1 + 30.0);
        let _ = writeln!(svg, r#"<text x="{:.2}" y="{:.2}">{}</text>"#, x1 + 36.0, ly + 4.0, escape(&s.agent));
    }
    svg.push_str("</svg>\n");
    Ok(svg)
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
