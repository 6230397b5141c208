//! CSV and markdown renderings of the report documents.
//!
//! CSV cells carry full precision (shortest round-trip decimal) and leave
//! undefined values empty. Markdown rounds metrics to 4 decimals and prints
//! variances in scientific notation with 4 decimals in the mantissa.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use anyhow::Result;
use parity_core::experiments::{Direction, FeatureMode, GridResult, MethodComparison};
use parity_core::fairness::BoundaryTable;
use parity_core::metrics::{Metric, MetricValue};

use crate::report::{AuditReport, CompareReport, GridReport};
use crate::config::RunConfig;

pub fn full(v: MetricValue) -> String {
    v.get().map(|x| x.to_string()).unwrap_or_default()
}

pub fn fixed4(v: MetricValue) -> String {
    match v.get() {
        Some(x) => format!("{x:.4}"),
        None => "undefined".into(),
    }
}

pub fn sci4(v: MetricValue) -> String {
    match v.get() {
        Some(x) => format!("{x:.4e}"),
        None => "undefined".into(),
    }
}

fn marker(d: Option<Direction>) -> &'static str {
    d.map_or("", Direction::marker)
}

fn marked(value: String, d: Option<Direction>) -> String {
    match marker(d) {
        "" => value,
        m => format!("{value} ({m})"),
    }
}

fn finish(w: csv::Writer<Vec<u8>>) -> Result<String> {
    Ok(String::from_utf8(w.into_inner()?)?)
}

/// One row per candidate and metric.
pub fn boundary_csv(table: &BoundaryTable) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec![
        "candidate".to_string(),
        "threshold".into(),
        "metric".into(),
        "overall".into(),
    ];
    header.extend(table.groups.iter().map(|g| format!("group:{g}")));
    header.extend(["variance".into(), "variance_with_overall".into(), "undefined_groups".into()]);
    w.write_record(&header)?;
    for row in &table.rows {
        for &m in &table.metrics {
            let mut rec = vec![
                row.candidate.to_string(),
                row.threshold.to_string(),
                m.to_string(),
                full(row.overall.get(m)),
            ];
            rec.extend(row.group_values(m).into_iter().map(full));
            rec.push(full(row.variance[&m]));
            rec.push(full(row.variance_for(m, parity_core::fairness::VarianceMode::IncludeOverall)));
            let undefined: Vec<&str> = row
                .per_group
                .iter()
                .filter(|g| !g.metrics.get(m).is_defined())
                .map(|g| g.group.as_str())
                .collect();
            rec.push(undefined.join(";"));
            w.write_record(&rec)?;
        }
    }
    finish(w)
}

fn group_labels(grid: &GridResult) -> Vec<String> {
    grid.cells
        .first()
        .map(|c| c.per_group.iter().map(|g| g.group.clone()).collect())
        .unwrap_or_default()
}

/// One row per cell and metric, with deltas against the `F=1` cell of the
/// same algorithm and sampling setting.
pub fn grid_csv(grid: &GridResult) -> Result<String> {
    let groups = group_labels(grid);
    let deltas: BTreeMap<&str, _> = grid.deltas.iter().map(|d| (d.comparison.as_str(), d)).collect();
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec![
        "algorithm".to_string(),
        "sigma".into(),
        "F".into(),
        "metric".into(),
        "threshold".into(),
        "overall".into(),
    ];
    header.extend(groups.iter().map(|g| format!("group:{g}")));
    header.extend([
        "variance".into(),
        "delta".into(),
        "delta_marker".into(),
        "variance_change".into(),
        "variance_marker".into(),
        "removed".into(),
    ]);
    w.write_record(&header)?;
    for cell in &grid.cells {
        for &m in &grid.options.metrics {
            let mut rec = vec![
                cell.spec.algorithm.to_string(),
                u8::from(cell.spec.sampling).to_string(),
                cell.spec.features.to_string(),
                m.to_string(),
                cell.threshold.threshold.to_string(),
                full(cell.overall.get(m)),
            ];
            rec.extend(cell.group_values(m).into_iter().map(full));
            rec.push(full(cell.variance[&m]));
            match deltas.get(cell.key.as_str()).and_then(|d| d.metrics.iter().find(|x| x.metric == m)) {
                Some(d) => {
                    rec.push(full(d.overall.delta));
                    rec.push(marker(d.overall.direction).into());
                    rec.push(full(d.variance_change));
                    rec.push(marker(d.variance_direction).into());
                }
                None => rec.extend([String::new(), String::new(), String::new(), String::new()]),
            }
            rec.push(cell.removed.join(";"));
            w.write_record(&rec)?;
        }
    }
    finish(w)
}

/// Four configurations by three algorithms, AUC then AUC group variance.
pub fn compare_csv(cmp: &MethodComparison) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["configuration".to_string(), "protected".into(), "sampling".into()];
    header.extend(cmp.algorithms.iter().map(|a| format!("auc_{a}")));
    header.extend(cmp.algorithms.iter().map(|a| format!("variance_{a}")));
    w.write_record(&header)?;
    for row in &cmp.rows {
        let mut rec = vec![
            row.label.clone(),
            if row.with_protected { "with" } else { "without" }.to_string(),
            if row.sampling { "after" } else { "before" }.to_string(),
        ];
        rec.extend(row.auc.iter().map(|v| full(*v)));
        rec.extend(row.variance.iter().map(|v| full(*v)));
        w.write_record(&rec)?;
    }
    finish(w)
}

fn config_section(out: &mut String, config: &RunConfig) {
    out.push_str("\n## Configuration\n\n```json\n");
    out.push_str(&serde_json::to_string_pretty(config).unwrap_or_default());
    out.push_str("\n```\n");
}

fn boundary_section(out: &mut String, table: &BoundaryTable, metric: Metric) {
    let _ = writeln!(out, "| Candidate | Threshold | Overall | {} | Variance |", table.groups.join(" | "));
    let _ = writeln!(out, "|---|---|---|{}---|", "---|".repeat(table.groups.len()));
    for row in &table.rows {
        let groups: Vec<String> = row.group_values(metric).into_iter().map(fixed4).collect();
        let _ = writeln!(
            out,
            "| {} | {:.4} | {} | {} | {} |",
            row.candidate,
            row.threshold,
            fixed4(row.overall.get(metric)),
            groups.join(" | "),
            sci4(row.variance[&metric]),
        );
    }
}

pub fn audit_markdown(report: &AuditReport) -> String {
    let c = &report.config;
    let mut out = String::new();
    let title = if report.parity.is_some() { "Parity audit" } else { "Threshold candidates" };
    let _ = writeln!(out, "# {title}: {} by '{}'\n", c.data.display(), c.protected);
    let _ = writeln!(
        out,
        "Model {} ({}oversampled), trained on {} rows, evaluated on {} held-out rows.\n",
        report.algorithm,
        if report.sampling { "" } else { "not " },
        report.train_rows,
        report.test_rows
    );
    let sizes: Vec<String> = report
        .test_group_sizes
        .iter()
        .map(|(g, n)| format!("{g}: {n}"))
        .collect();
    let _ = writeln!(out, "Evaluation groups: {}.\n", sizes.join(", "));

    let choice = &report.choice;
    let _ = writeln!(out, "## Fairness threshold\n");
    let _ = writeln!(
        out,
        "Selected candidate `{}` at threshold {:.4}: {} group variance {} ({}).\n",
        choice.selected,
        choice.threshold,
        choice.metric,
        sci4(MetricValue::defined(choice.variance)),
        match choice.mode {
            parity_core::fairness::VarianceMode::GroupsOnly => "groups only",
            parity_core::fairness::VarianceMode::IncludeOverall => "groups and overall",
        }
    );

    if let Some(parity) = &report.parity {
        let _ = writeln!(out, "## Classification parity\n");
        let verdict = if parity.vacuous {
            "PASS (vacuous: fewer than two groups with a defined value)".to_string()
        } else if parity.pass {
            "PASS".to_string()
        } else {
            "FAIL".to_string()
        };
        let _ = writeln!(out, "{} at xi = {}: {verdict}.\n", parity.metric, parity.xi);
        if !parity.pairs.is_empty() {
            let _ = writeln!(out, "| Group A | Group B | Difference | Pass |\n|---|---|---|---|");
            for p in &parity.pairs {
                let _ = writeln!(out, "| {} | {} | {:.4} | {} |", p.a, p.b, p.difference, if p.pass { "yes" } else { "no" });
            }
            out.push('\n');
        }
        if !parity.excluded.is_empty() {
            let _ = writeln!(out, "Excluded (undefined {}): {}.\n", parity.metric, parity.excluded.join(", "));
        }
    }

    let _ = writeln!(out, "## Metrics at the selected threshold\n");
    let _ = writeln!(out, "| Scope | AUC | Precision | Recall | F1 | Brier | Flags |\n|---|---|---|---|---|---|---|");
    let mut line = |scope: &str, m: &parity_core::metrics::MetricVector| {
        let flags: Vec<String> = m
            .flags
            .iter()
            .map(|f| serde_json::to_value(f).ok().and_then(|v| v.as_str().map(str::to_string)).unwrap_or_default())
            .collect();
        let _ = writeln!(
            out,
            "| {scope} | {} | {} | {} | {} | {} | {} |",
            fixed4(m.auc),
            fixed4(m.precision),
            fixed4(m.recall),
            fixed4(m.f1),
            fixed4(m.brier),
            flags.join(", ")
        );
    };
    line("overall", &report.overall);
    for g in &report.per_group {
        line(&g.group, &g.metrics);
    }

    let _ = writeln!(out, "\n## Performance boundary ({})\n", choice.metric);
    boundary_section(&mut out, &report.boundary, choice.metric);
    config_section(&mut out, c);
    out
}

pub fn grid_markdown(report: &GridReport) -> String {
    let grid = &report.grid;
    let groups = group_labels(grid);
    let deltas: BTreeMap<&str, _> = grid.deltas.iter().map(|d| (d.comparison.as_str(), d)).collect();
    let mut out = String::new();
    let _ = writeln!(out, "# Ablation grid: {} by '{}'\n", report.config.data.display(), grid.protected);
    let _ = writeln!(
        out,
        "F = 1 keeps every feature, F = 0 drops '{}', F = Δ also drops the proxies [{}]. \
         σ = 1 oversamples the training groups. Deltas compare each cell with F = 1 at the same σ: \
         metric deltas are absolute, variance changes relative; `+` marks an increase and `-` a decrease.\n",
        grid.protected,
        grid.proxies.selected.join(", ")
    );
    for &algo in &grid.algorithms {
        let _ = writeln!(out, "## {algo}\n");
        let _ = writeln!(
            out,
            "| Metric | σ | F | Overall | {} | Variance | Δ overall | Variance change |",
            groups.join(" | ")
        );
        let _ = writeln!(out, "|---|---|---|---|{}---|---|---|", "---|".repeat(groups.len()));
        for &m in &grid.options.metrics {
            for cell in grid.cells.iter().filter(|c| c.spec.algorithm == algo) {
                let g: Vec<String> = cell.group_values(m).into_iter().map(fixed4).collect();
                let (delta, change) = match deltas
                    .get(cell.key.as_str())
                    .and_then(|d| d.metrics.iter().find(|x| x.metric == m))
                {
                    Some(d) => (
                        marked(fixed4(d.overall.delta), d.overall.direction),
                        marked(fixed4(d.variance_change), d.variance_direction),
                    ),
                    None => (String::new(), String::new()),
                };
                let _ = writeln!(
                    out,
                    "| {m} | {} | {} | {} | {} | {} | {delta} | {change} |",
                    u8::from(cell.spec.sampling),
                    cell.spec.features,
                    fixed4(cell.overall.get(m)),
                    g.join(" | "),
                    sci4(cell.variance[&m]),
                );
            }
        }
        out.push('\n');
    }
    let _ = writeln!(out, "## Thresholds\n\n| Algorithm | σ | F | Youden threshold | J | Removed |\n|---|---|---|---|---|---|");
    for cell in &grid.cells {
        let _ = writeln!(
            out,
            "| {} | {} | {} | {:.4} | {:.4} | {} |",
            cell.spec.algorithm,
            u8::from(cell.spec.sampling),
            cell.spec.features,
            cell.threshold.threshold,
            cell.threshold.j,
            cell.removed.join(", ")
        );
    }
    let _ = writeln!(out, "\n## Proxy ranking\n\n| Feature | Importance | Association | Selected |\n|---|---|---|---|");
    for (name, imp) in &grid.proxies.ranking.entries {
        let assoc = grid
            .proxies
            .associations
            .iter()
            .find(|a| &a.feature == name)
            .map_or(0.0, |a| a.value);
        let _ = writeln!(
            out,
            "| {name} | {imp:.4} | {assoc:.4} | {} |",
            if grid.proxies.selected.contains(name) { "yes" } else { "" }
        );
    }
    config_section(&mut out, &report.config);
    out
}

pub fn compare_markdown(report: &CompareReport) -> String {
    let cmp = &report.comparison;
    let mut out = String::new();
    let _ = writeln!(out, "# Method comparison: {} by '{}'\n", report.config.data.display(), cmp.protected);
    let algos: Vec<String> = cmp.algorithms.iter().map(|a| a.to_string()).collect();
    let _ = writeln!(
        out,
        "| Configuration | {} | {} |",
        algos.iter().map(|a| format!("AUC {a}")).collect::<Vec<_>>().join(" | "),
        algos.iter().map(|a| format!("Variance {a}")).collect::<Vec<_>>().join(" | ")
    );
    let _ = writeln!(out, "|---|{}", "---|".repeat(2 * algos.len()));
    for row in &cmp.rows {
        let auc: Vec<String> = row.auc.iter().map(|v| fixed4(*v)).collect();
        let var: Vec<String> = row.variance.iter().map(|v| sci4(*v)).collect();
        let _ = writeln!(out, "| {} | {} | {} |", row.label, auc.join(" | "), var.join(" | "));
    }
    let _ = writeln!(
        out,
        "\n## Rankings\n\nAscending order (lowest first). The AUC order and the variance order are computed independently.\n"
    );
    let _ = writeln!(out, "| Scope | By AUC | By AUC variance |\n|---|---|---|");
    let join = |v: &[parity_core::models::Algorithm]| {
        v.iter().map(|a| a.to_string()).collect::<Vec<_>>().join(" < ")
    };
    for r in &cmp.rankings {
        let _ = writeln!(out, "| {} | {} | {} |", r.scope, join(&r.by_auc), join(&r.by_variance));
    }
    config_section(&mut out, &report.config);
    out
}

/// Feature-mode label used in CSV `F` columns.
pub fn parse_feature_mode(s: &str) -> Option<FeatureMode> {
    FeatureMode::ALL.into_iter().find(|f| f.to_string() == s)
}
