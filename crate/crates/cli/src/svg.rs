//! Self-contained SVG chart of a performance boundary: one panel per metric,
//! candidates along x, one point series for the overall value and one per
//! group.

use std::fmt::Write as _;

use parity_core::fairness::{BoundaryTable, FairnessChoice};
use parity_core::metrics::Metric;

const PANEL_W: f64 = 460.0;
const PANEL_H: f64 = 280.0;
const MARGIN_L: f64 = 50.0;
const MARGIN_R: f64 = 20.0;
const MARGIN_T: f64 = 30.0;
const MARGIN_B: f64 = 70.0;
const COLUMNS: usize = 2;
const LEGEND_H: f64 = 30.0;

const PALETTE: [&str; 8] = [
    "#222222", "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2",
];

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

fn panel(out: &mut String, table: &BoundaryTable, metric: Metric, chosen: Option<usize>, x0: f64, y0: f64) {
    let plot_w = PANEL_W - MARGIN_L - MARGIN_R;
    let plot_h = PANEL_H - MARGIN_T - MARGIN_B;
    let n = table.rows.len().max(1);
    let x_of = |i: usize| x0 + MARGIN_L + plot_w * (i as f64 + 0.5) / n as f64;
    let y_of = |v: f64| y0 + MARGIN_T + plot_h * (1.0 - v.clamp(0.0, 1.0));

    let _ = writeln!(out, r#"<g class="panel" data-metric="{metric}">"#);
    let _ = writeln!(
        out,
        r#"<text x="{:.1}" y="{:.1}" font-size="14" font-weight="bold">{metric}</text>"#,
        x0 + MARGIN_L,
        y0 + 18.0
    );
    let _ = writeln!(
        out,
        r##"<rect x="{:.1}" y="{:.1}" width="{plot_w:.1}" height="{plot_h:.1}" fill="none" stroke="#999"/>"##,
        x0 + MARGIN_L,
        y0 + MARGIN_T
    );
    for tick in [0.0, 0.25, 0.5, 0.75, 1.0] {
        let y = y_of(tick);
        let _ = writeln!(
            out,
            r##"<line x1="{:.1}" y1="{y:.1}" x2="{:.1}" y2="{y:.1}" stroke="#eee"/><text x="{:.1}" y="{:.1}" font-size="10" text-anchor="end">{tick:.2}</text>"##,
            x0 + MARGIN_L,
            x0 + MARGIN_L + plot_w,
            x0 + MARGIN_L - 4.0,
            y + 3.0
        );
    }
    if let Some(c) = chosen {
        let x = x_of(c);
        let _ = writeln!(
            out,
            r##"<line class="selected" x1="{x:.1}" y1="{:.1}" x2="{x:.1}" y2="{:.1}" stroke="#888" stroke-dasharray="4 3"/>"##,
            y0 + MARGIN_T,
            y0 + MARGIN_T + plot_h
        );
    }
    for (i, row) in table.rows.iter().enumerate() {
        let x = x_of(i);
        let y = y0 + MARGIN_T + plot_h + 12.0;
        let _ = writeln!(
            out,
            r#"<text x="{x:.1}" y="{y:.1}" font-size="10" text-anchor="end" transform="rotate(-35 {x:.1} {y:.1})">{} ({:.3})</text>"#,
            escape(&row.candidate.to_string()),
            row.threshold
        );
    }

    let mut series: Vec<(String, Vec<Option<f64>>)> = vec![(
        "overall".into(),
        table.rows.iter().map(|r| r.overall.get(metric).get()).collect(),
    )];
    for (k, g) in table.groups.iter().enumerate() {
        series.push((
            g.clone(),
            table
                .rows
                .iter()
                .map(|r| r.per_group[k].metrics.get(metric).get())
                .collect(),
        ));
    }
    for (s, (name, values)) in series.iter().enumerate() {
        let colour = PALETTE[s % PALETTE.len()];
        let _ = writeln!(out, r#"<g class="series" data-series="{}" fill="{colour}">"#, escape(name));
        for (i, v) in values.iter().enumerate() {
            if let Some(v) = v {
                let _ = writeln!(
                    out,
                    r#"<circle cx="{:.1}" cy="{:.1}" r="{}"><title>{}: {v}</title></circle>"#,
                    x_of(i),
                    y_of(*v),
                    if s == 0 { 4.5 } else { 3.5 },
                    escape(name)
                );
            }
        }
        out.push_str("</g>\n");
    }
    out.push_str("</g>\n");
}

pub fn boundary_svg(table: &BoundaryTable, choice: Option<&FairnessChoice>) -> String {
    let panels = table.metrics.len().max(1);
    let rows = panels.div_ceil(COLUMNS);
    let width = PANEL_W * COLUMNS.min(panels) as f64;
    let height = PANEL_H * rows as f64 + LEGEND_H;
    let chosen = choice.and_then(|c| table.rows.iter().position(|r| r.candidate == c.selected));

    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}" font-family="sans-serif">"#
    );
    let _ = writeln!(
        out,
        r#"<title>Performance boundary by {}</title><rect width="100%" height="100%" fill="white"/>"#,
        escape(&table.feature)
    );
    let mut names = vec!["overall".to_string()];
    names.extend(table.groups.iter().cloned());
    let mut x = 10.0;
    for (s, name) in names.iter().enumerate() {
        let _ = writeln!(
            out,
            r#"<circle cx="{x:.1}" cy="15" r="5" fill="{}"/><text x="{:.1}" y="19" font-size="12">{}</text>"#,
            PALETTE[s % PALETTE.len()],
            x + 9.0,
            escape(name)
        );
        x += 24.0 + 7.0 * name.chars().count() as f64;
    }
    for (p, &metric) in table.metrics.iter().enumerate() {
        let x0 = PANEL_W * (p % COLUMNS) as f64;
        let y0 = LEGEND_H + PANEL_H * (p / COLUMNS) as f64;
        panel(&mut out, table, metric, chosen, x0, y0);
    }
    out.push_str("</svg>\n");
    out
}
