//! Metric reports: row-labelled CSV tables and precision/recall curves.

use std::fmt::Write as _;

use crate::eval::PrPoint;

/// A table of metric values, e.g. one row per method and one column per
/// IoU threshold.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricTable {
    /// Name of the label column.
    pub label: String,
    pub columns: Vec<String>,
    pub rows: Vec<(String, Vec<f64>)>,
}

impl MetricTable {
    pub fn new(label: impl Into<String>, columns: Vec<String>) -> Self {
        MetricTable {
            label: label.into(),
            columns,
            rows: Vec::new(),
        }
    }

    pub fn push_row(&mut self, name: impl Into<String>, values: Vec<f64>) {
        debug_assert_eq!(values.len(), self.columns.len());
        self.rows.push((name.into(), values));
    }
}

/// Six decimal places; rows keep insertion order. `+ 0.0` folds `-0.0` into `0.0`.
pub fn write_report(table: &MetricTable) -> String {
    let mut out = table.label.clone();
    for c in &table.columns {
        write!(out, ",{c}").unwrap();
    }
    out.push('\n');
    for (name, values) in &table.rows {
        out.push_str(name);
        for v in values {
            write!(out, ",{:.6}", v + 0.0).unwrap();
        }
        out.push('\n');
    }
    out
}

pub const PR_HEADER: &str = "threshold,precision,recall";

pub fn write_pr_curve(points: &[PrPoint]) -> String {
    let mut out = format!("{PR_HEADER}\n");
    for p in points {
        writeln!(
            out,
            "{:.6},{:.6},{:.6}",
            p.parameter + 0.0,
            p.precision + 0.0,
            p.recall + 0.0
        )
        .unwrap();
    }
    out
}

/// Minimal standalone SVG of one or more PR curves (recall on x, precision on y).
pub fn render_pr_svg(title: &str, curves: &[(String, Vec<PrPoint>)]) -> String {
    const SIZE: f64 = 400.0;
    const PAD: f64 = 40.0;
    const COLORS: [&str; 8] = [
        "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f",
    ];
    let x = |r: f64| PAD + r * SIZE;
    let y = |p: f64| PAD + (1.0 - p) * SIZE;

    let mut svg = String::new();
    writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{w}" viewBox="0 0 {w} {w}">"#,
        w = SIZE + 2.0 * PAD + 120.0
    )
    .unwrap();
    writeln!(svg, r#"<text x="{PAD}" y="20" font-size="14">{}</text>"#, escape(title)).unwrap();
    writeln!(
        svg,
        r#"<rect x="{PAD}" y="{PAD}" width="{SIZE}" height="{SIZE}" fill="none" stroke="black"/>"#
    )
    .unwrap();
    writeln!(
        svg,
        r#"<text x="{}" y="{}" font-size="12">recall</text>"#,
        PAD + SIZE / 2.0 - 15.0,
        PAD + SIZE + 25.0
    )
    .unwrap();
    writeln!(
        svg,
        r#"<text x="5" y="{}" font-size="12">precision</text>"#,
        PAD + SIZE / 2.0
    )
    .unwrap();
    for (i, (name, points)) in curves.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        let path: Vec<String> = points
            .iter()
            .map(|p| format!("{:.2},{:.2}", x(p.recall), y(p.precision)))
            .collect();
        writeln!(
            svg,
            r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#,
            path.join(" ")
        )
        .unwrap();
        writeln!(
            svg,
            r#"<text x="{}" y="{}" font-size="11" fill="{color}">{}</text>"#,
            PAD + SIZE + 10.0,
            PAD + 15.0 * (i as f64 + 1.0),
            escape(name)
        )
        .unwrap();
    }
    svg.push_str("</svg>\n");
    svg
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
