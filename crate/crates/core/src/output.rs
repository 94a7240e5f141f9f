//! CSV and SVG writers.
//!
//! CSV: comma separated, LF line endings, floats as `{:.16e}` (17
//! significant digits, exact round trip), absent values as empty fields.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::analysis::EnergySample;
use crate::certificates::CertificateReport;
use crate::error::{Error, Result};
use crate::run::SweepRow;

pub const SAMPLES_HEADER: &str = "t,E,lnE,V,trace";
pub const SWEEP_HEADER: &str = "value,nu,kappa,r2";
pub const REPORT_HEADER: &str = "key,value";

pub fn format_float(v: f64) -> String {
    format!("{v:.16e}")
}

fn optional(v: Option<f64>) -> String {
    v.map(format_float).unwrap_or_default()
}

pub fn samples_csv(samples: &[EnergySample]) -> String {
    let mut out = String::from(SAMPLES_HEADER);
    out.push('\n');
    for s in samples {
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            format_float(s.t),
            format_float(s.energy),
            format_float(s.energy.ln()),
            optional(s.lyapunov),
            format_float(s.trace)
        );
    }
    out
}

pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from(SWEEP_HEADER);
    out.push('\n');
    for row in rows {
        let fit = row.fit();
        let _ = writeln!(
            out,
            "{},{},{},{}",
            format_float(row.value),
            optional(fit.map(|f| f.nu)),
            optional(fit.map(|f| f.kappa)),
            optional(fit.map(|f| f.r2))
        );
    }
    out
}

pub fn report_csv(report: &CertificateReport) -> String {
    let mut out = String::from(REPORT_HEADER);
    out.push('\n');
    for (key, value) in report.entries() {
        let _ = writeln!(out, "{key},{}", optional(value));
    }
    out
}

fn write(path: &Path, contents: &str) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

pub fn write_samples_csv(samples: &[EnergySample], path: &Path) -> Result<()> {
    write(path, &samples_csv(samples))
}

pub fn write_sweep_csv(rows: &[SweepRow], path: &Path) -> Result<()> {
    write(path, &sweep_csv(rows))
}

pub fn write_report_csv(report: &CertificateReport, path: &Path) -> Result<()> {
    write(path, &report_csv(report))
}

/// One named curve of `(t, ln E)` points.
#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
}

impl Series {
    pub fn log_energy(label: impl Into<String>, samples: &[EnergySample]) -> Self {
        Self {
            label: label.into(),
            points: samples.iter().map(|s| (s.t, s.energy.ln())).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Plot {
    pub svg: String,
    pub warnings: Vec<String>,
}

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 480.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 170.0;
const TOP: f64 = 30.0;
const BOTTOM: f64 = 50.0;
const COLORS: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf",
];

/// Line chart of `ln E` against `t`; non-finite points are dropped with a warning.
pub fn render_svg(series: &[Series]) -> Result<Plot> {
    let mut warnings = Vec::new();
    let mut clean = Vec::with_capacity(series.len());
    for s in series {
        if s.points.is_empty() {
            return Err(Error::EmptySeries(s.label.clone()));
        }
        let kept: Vec<(f64, f64)> = s
            .points
            .iter()
            .copied()
            .filter(|(t, v)| t.is_finite() && v.is_finite())
            .collect();
        let dropped = s.points.len() - kept.len();
        if dropped > 0 {
            warnings.push(format!("series `{}`: dropped {dropped} non-finite point(s)", s.label));
        }
        if kept.is_empty() {
            return Err(Error::EmptySeries(s.label.clone()));
        }
        clean.push((s.label.as_str(), kept));
    }

    let (mut t_lo, mut t_hi, mut v_lo, mut v_hi) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for (_, pts) in &clean {
        for &(t, v) in pts {
            t_lo = t_lo.min(t);
            t_hi = t_hi.max(t);
            v_lo = v_lo.min(v);
            v_hi = v_hi.max(v);
        }
    }
    let (t_lo, t_hi) = padded(t_lo, t_hi);
    let (v_lo, v_hi) = padded(v_lo, v_hi);
    let plot_w = WIDTH - LEFT - RIGHT;
    let plot_h = HEIGHT - TOP - BOTTOM;
    let sx = |t: f64| LEFT + (t - t_lo) / (t_hi - t_lo) * plot_w;
    let sy = |v: f64| TOP + (v_hi - v) / (v_hi - v_lo) * plot_h;

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(svg, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let _ = writeln!(
        svg,
        r#"<rect x="{LEFT}" y="{TOP}" width="{plot_w}" height="{plot_h}" fill="none" stroke="black"/>"#
    );
    for i in 0..=4 {
        let f = i as f64 / 4.0;
        let t = t_lo + f * (t_hi - t_lo);
        let v = v_lo + f * (v_hi - v_lo);
        let (x, y) = (sx(t), sy(v));
        let _ = writeln!(
            svg,
            r#"<line x1="{x:.2}" y1="{:.2}" x2="{x:.2}" y2="{:.2}" stroke="black"/><text x="{x:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            TOP + plot_h,
            TOP + plot_h + 5.0,
            TOP + plot_h + 20.0,
            tick(t)
        );
        let _ = writeln!(
            svg,
            r#"<line x1="{:.2}" y1="{y:.2}" x2="{LEFT}" y2="{y:.2}" stroke="black"/><text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#,
            LEFT - 5.0,
            LEFT - 8.0,
            y + 4.0,
            tick(v)
        );
    }
    let _ = writeln!(
        svg,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">t</text>"#,
        LEFT + plot_w / 2.0,
        HEIGHT - 10.0
    );
    let _ = writeln!(
        svg,
        r#"<text transform="translate(18 {:.2}) rotate(-90)" text-anchor="middle">ln E(t)</text>"#,
        TOP + plot_h / 2.0
    );
    for (i, (label, pts)) in clean.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        let coords: Vec<String> = pts.iter().map(|&(t, v)| format!("{:.2},{:.2}", sx(t), sy(v))).collect();
        let _ = writeln!(
            svg,
            r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#,
            coords.join(" ")
        );
        let ly = TOP + 10.0 + 18.0 * i as f64;
        let lx = WIDTH - RIGHT + 15.0;
        let _ = writeln!(
            svg,
            r#"<g class="legend"><line x1="{lx}" y1="{ly}" x2="{}" y2="{ly}" stroke="{color}" stroke-width="2"/><text x="{}" y="{}">{}</text></g>"#,
            lx + 20.0,
            lx + 25.0,
            ly + 4.0,
            escape(label)
        );
    }
    svg.push_str("</svg>\n");
    Ok(Plot { svg, warnings })
}

pub fn write_svg_plot(series: &[Series], path: &Path) -> Result<Vec<String>> {
    let plot = render_svg(series)?;
    write(path, &plot.svg)?;
    Ok(plot.warnings)
}

/// Range widened by 5% on each side; degenerate ranges get a unit width.
fn padded(lo: f64, hi: f64) -> (f64, f64) {
    let span = hi - lo;
    if span > 0.0 {
        (lo - 0.05 * span, hi + 0.05 * span)
    } else {
        (lo - 0.5, hi + 0.5)
    }
}

fn tick(v: f64) -> String {
    if v == 0.0 || (1e-3..1e4).contains(&v.abs()) {
        format!("{}", (v * 1e4).round() / 1e4)
    } else {
        format!("{v:.2e}")
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
