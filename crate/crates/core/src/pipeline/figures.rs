//! Self-contained SVG charts for an [`AnalysisReport`].
//!
//! * `accuracy.svg`: probe accuracy per layer, one line per classifier and level.
//! * `gdv.svg`: GDV per layer, one line per level.
//! * `correlation.svg`: accuracy against GDV, one scatter panel per pairing,
//!   annotated with r_s and p.
//!
//! Series with fewer than two points are drawn as markers only. Output bytes
//! depend only on the report.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use super::{AnalysisReport, Classifier, Metric, PipelineError};
use crate::Level;

pub const FIGURE_NAMES: [&str; 3] = ["accuracy.svg", "gdv.svg", "correlation.svg"];

const PALETTE: [&str; 4] = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e"];
const PANEL_W: f64 = 640.0;
const PANEL_H: f64 = 400.0;
const MARGIN_LEFT: f64 = 70.0;
const MARGIN_RIGHT: f64 = 170.0;
const MARGIN_TOP: f64 = 40.0;
const MARGIN_BOTTOM: f64 = 55.0;

/// Writes the three charts to `<path_prefix><name>` and returns their paths.
pub fn emit_figures(report: &AnalysisReport, path_prefix: &Path) -> Result<Vec<PathBuf>, PipelineError> {
    if report.layers.is_empty() {
        return Err(PipelineError::Validation("report has no layers to plot".into()));
    }
    let docs = [accuracy_svg(report), gdv_svg(report), correlation_svg(report)];
    let mut written = Vec::new();
    for (name, doc) in FIGURE_NAMES.iter().zip(docs) {
        let mut path = OsString::from(path_prefix.as_os_str());
        path.push(name);
        let path = PathBuf::from(path);
        fs::write(&path, doc).map_err(|source| PipelineError::Io {
            path: path.clone(),
            source,
        })?;
        written.push(path);
    }
    Ok(written)
}

struct Series {
    name: String,
    color: &'static str,
    points: Vec<(f64, f64)>,
}

struct Panel {
    title: String,
    x_label: String,
    y_label: String,
    series: Vec<Series>,
    connect: bool,
    integer_x: bool,
    annotation: Option<String>,
}

fn layer_series(report: &AnalysisReport, level: Level, metric: Metric, name: String, color: &'static str) -> Series {
    Series {
        name,
        color,
        points: report
            .layers_of(level)
            .iter()
            .map(|l| (l.layer_index as f64, metric.of(l)))
            .collect(),
    }
}

pub fn accuracy_svg(report: &AnalysisReport) -> String {
    let mut series = Vec::new();
    let mut colors = PALETTE.iter();
    for level in [Level::Token, Level::Sentence] {
        for (metric, label) in [(Metric::LrAccuracy, "LR"), (Metric::SvmAccuracy, "SVM")] {
            let color = colors.next().expect("four colours");
            series.push(layer_series(report, level, metric, format!("{label} ({level})"), color));
        }
    }
    let panel = Panel {
        title: "Classification accuracy by layer".into(),
        x_label: "layer".into(),
        y_label: "accuracy".into(),
        series,
        connect: true,
        integer_x: true,
        annotation: None,
    };
    document(&[panel], 1)
}

pub fn gdv_svg(report: &AnalysisReport) -> String {
    let series = vec![
        layer_series(report, Level::Token, Metric::Gdv, "token".into(), PALETTE[0]),
        layer_series(report, Level::Sentence, Metric::Gdv, "sentence".into(), PALETTE[2]),
    ];
    let panel = Panel {
        title: "GDV by layer".into(),
        x_label: "layer".into(),
        y_label: "GDV".into(),
        series,
        connect: true,
        integer_x: true,
        annotation: None,
    };
    document(&[panel], 1)
}

pub fn correlation_svg(report: &AnalysisReport) -> String {
    let mut panels = Vec::new();
    for (i, entry) in report.correlations.iter().enumerate() {
        let metric = match entry.classifier {
            Classifier::Lr => Metric::LrAccuracy,
            Classifier::Svm => Metric::SvmAccuracy,
        };
        let points = report
            .layers_of(entry.level)
            .iter()
            .map(|l| (l.gdv, metric.of(l)))
            .collect();
        let annotation = match (entry.r_s, entry.p_value) {
            (Some(r), Some(p)) => format!("r_s = {r:.2}, p = {p:.3}, n = {}", entry.n),
            _ => format!("r_s undefined, n = {}", entry.n),
        };
        let label = entry.classifier.as_str().to_uppercase();
        panels.push(Panel {
            title: format!("{label} accuracy vs GDV ({})", entry.level),
            x_label: "GDV".into(),
            y_label: "accuracy".into(),
            series: vec![Series {
                name: format!("{label} ({})", entry.level),
                color: PALETTE[i % PALETTE.len()],
                points,
            }],
            connect: false,
            integer_x: false,
            annotation: Some(annotation),
        });
    }
    document(&panels, 2)
}

fn document(panels: &[Panel], columns: usize) -> String {
    let columns = columns.max(1).min(panels.len().max(1));
    let rows = panels.len().div_ceil(columns).max(1);
    let width = PANEL_W * columns as f64;
    let height = PANEL_H * rows as f64;
    let mut svg = String::new();
    let _ = writeln!(svg, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width:.0}" height="{height:.0}" viewBox="0 0 {width:.0} {height:.0}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(svg, r#"<rect x="0" y="0" width="{width:.0}" height="{height:.0}" fill="white"/>"#);
    for (i, panel) in panels.iter().enumerate() {
        let ox = (i % columns) as f64 * PANEL_W;
        let oy = (i / columns) as f64 * PANEL_H;
        render_panel(&mut svg, panel, ox, oy);
    }
    svg.push_str("</svg>\n");
    svg
}

fn render_panel(svg: &mut String, panel: &Panel, ox: f64, oy: f64) {
    let series: Vec<&Series> = panel.series.iter().filter(|s| !s.points.is_empty()).collect();
    let left = ox + MARGIN_LEFT;
    let top = oy + MARGIN_TOP;
    let plot_w = PANEL_W - MARGIN_LEFT - MARGIN_RIGHT;
    let plot_h = PANEL_H - MARGIN_TOP - MARGIN_BOTTOM;
    let bottom = top + plot_h;

    let _ = writeln!(svg, "<g>");
    let _ = writeln!(
        svg,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle" font-size="14">{}</text>"#,
        left + plot_w / 2.0,
        oy + 24.0,
        escape(&panel.title)
    );

    let xs = series.iter().flat_map(|s| s.points.iter().map(|p| p.0));
    let ys = series.iter().flat_map(|s| s.points.iter().map(|p| p.1));
    let x_axis = if panel.integer_x { integer_axis(xs) } else { nice_axis(xs) };
    let y_axis = nice_axis(ys);
    let sx = |x: f64| left + (x - x_axis.lo) / (x_axis.hi - x_axis.lo) * plot_w;
    let sy = |y: f64| bottom - (y - y_axis.lo) / (y_axis.hi - y_axis.lo) * plot_h;

    // Frame and ticks.
    let _ = writeln!(
        svg,
        r##"<rect x="{left:.2}" y="{top:.2}" width="{plot_w:.2}" height="{plot_h:.2}" fill="none" stroke="#333333"/>"##
    );
    for (value, label) in x_axis.ticks() {
        let x = sx(value);
        let _ = writeln!(
            svg,
            r##"<line x1="{x:.2}" y1="{bottom:.2}" x2="{x:.2}" y2="{:.2}" stroke="#333333"/>"##,
            bottom + 5.0
        );
        let _ = writeln!(
            svg,
            r#"<text x="{x:.2}" y="{:.2}" text-anchor="middle">{label}</text>"#,
            bottom + 19.0
        );
    }
    for (value, label) in y_axis.ticks() {
        let y = sy(value);
        let _ = writeln!(
            svg,
            r##"<line x1="{:.2}" y1="{y:.2}" x2="{left:.2}" y2="{y:.2}" stroke="#333333"/>"##,
            left - 5.0
        );
        let _ = writeln!(
            svg,
            r##"<line x1="{left:.2}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="#dddddd"/>"##,
            left + plot_w
        );
        let _ = writeln!(
            svg,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{label}</text>"#,
            left - 8.0,
            y + 4.0
        );
    }
    let _ = writeln!(
        svg,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
        left + plot_w / 2.0,
        bottom + 42.0,
        escape(&panel.x_label)
    );
    let (lx, ly) = (ox + 18.0, top + plot_h / 2.0);
    let _ = writeln!(
        svg,
        r#"<text x="{lx:.2}" y="{ly:.2}" text-anchor="middle" transform="rotate(-90 {lx:.2} {ly:.2})">{}</text>"#,
        escape(&panel.y_label)
    );

    for s in &series {
        if panel.connect && s.points.len() >= 2 {
            let coords: Vec<String> = s
                .points
                .iter()
                .map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y)))
                .collect();
            let _ = writeln!(
                svg,
                r#"<polyline fill="none" stroke="{}" stroke-width="2" points="{}"/>"#,
                s.color,
                coords.join(" ")
            );
        }
        for &(x, y) in &s.points {
            let _ = writeln!(
                svg,
                r#"<circle cx="{:.2}" cy="{:.2}" r="3" fill="{}"/>"#,
                sx(x),
                sy(y),
                s.color
            );
        }
    }

    // Legend, non-empty series only.
    let legend_x = left + plot_w + 15.0;
    for (i, s) in series.iter().enumerate() {
        let y = top + 10.0 + 20.0 * i as f64;
        let _ = writeln!(
            svg,
            r#"<line x1="{legend_x:.2}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="{}" stroke-width="2"/>"#,
            legend_x + 20.0,
            s.color
        );
        let _ = writeln!(
            svg,
            r#"<text x="{:.2}" y="{:.2}">{}</text>"#,
            legend_x + 26.0,
            y + 4.0,
            escape(&s.name)
        );
    }
    if let Some(note) = &panel.annotation {
        let _ = writeln!(
            svg,
            r#"<text x="{:.2}" y="{:.2}">{}</text>"#,
            left + 8.0,
            top + 16.0,
            escape(note)
        );
    }
    let _ = writeln!(svg, "</g>");
}

struct Axis {
    lo: f64,
    hi: f64,
    step: f64,
    decimals: usize,
}

impl Axis {
    fn ticks(&self) -> Vec<(f64, String)> {
        let count = ((self.hi - self.lo) / self.step).round() as usize;
        (0..=count)
            .map(|k| {
                let v = self.lo + k as f64 * self.step;
                let v = if v.abs() < self.step * 1e-9 { 0.0 } else { v };
                (v, format!("{v:.*}", self.decimals))
            })
            .collect()
    }
}

fn nice_axis(values: impl Iterator<Item = f64>) -> Axis {
    let (mut min, mut max) = min_max(values).unwrap_or((0.0, 1.0));
    if max <= min {
        let pad = if min == 0.0 { 0.5 } else { min.abs() * 0.1 };
        min -= pad;
        max += pad;
    }
    let raw = (max - min) / 5.0;
    let magnitude = 10f64.powf(raw.log10().floor());
    let step = magnitude
        * match raw / magnitude {
            r if r < 1.5 => 1.0,
            r if r < 3.0 => 2.0,
            r if r < 7.0 => 5.0,
            _ => 10.0,
        };
    let decimals = (-step.log10().floor()).max(0.0) as usize;
    Axis {
        lo: (min / step).floor() * step,
        hi: (max / step).ceil() * step,
        step,
        decimals,
    }
}

fn integer_axis(values: impl Iterator<Item = f64>) -> Axis {
    let (min, max) = min_max(values).unwrap_or((0.0, 1.0));
    let (lo, hi) = if max > min { (min, max) } else { (min - 1.0, max + 1.0) };
    let span = hi - lo;
    let step = if span <= 25.0 { 1.0 } else { (span / 10.0).ceil() };
    Axis {
        lo,
        hi: lo + (span / step).ceil() * step,
        step,
        decimals: 0,
    }
}

fn min_max(values: impl Iterator<Item = f64>) -> Option<(f64, f64)> {
    values.filter(|v| v.is_finite()).fold(None, |acc, v| match acc {
        None => Some((v, v)),
        Some((lo, hi)) => Some((lo.min(v), hi.max(v))),
    })
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}
