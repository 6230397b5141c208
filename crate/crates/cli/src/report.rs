//! Report documents and the files they are written to.

use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use parity_core::experiments::{GridResult, MethodComparison};
use parity_core::fairness::{BoundaryTable, FairnessChoice, GroupMetrics, ParityVerdict};
use parity_core::metrics::MetricVector;
use parity_core::models::{Algorithm, ModelConfig};
use serde::{Deserialize, Serialize};

use crate::args::Format;
use crate::config::RunConfig;
use crate::{render, svg};

pub const AUDIT_JSON: &str = "audit.json";
pub const THRESHOLDS_JSON: &str = "thresholds.json";
pub const GRID_JSON: &str = "grid.json";
pub const COMPARE_JSON: &str = "compare.json";
pub const BOUNDARY_CSV: &str = "boundary.csv";
pub const BOUNDARY_SVG: &str = "boundary.svg";
pub const CHOICE_JSON: &str = "fairness_choice.json";
pub const PARITY_JSON: &str = "parity.json";
pub const GRID_CSV: &str = "grid.csv";
pub const COMPARE_CSV: &str = "compare.csv";
pub const REPORT_MD: &str = "report.md";

/// Result of `audit` (with a parity verdict) or `thresholds` (without).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditReport {
    pub config: RunConfig,
    pub algorithm: Algorithm,
    pub model: ModelConfig,
    pub sampling: bool,
    pub train_rows: usize,
    pub test_rows: usize,
    pub train_group_sizes: Vec<(String, usize)>,
    pub test_group_sizes: Vec<(String, usize)>,
    pub boundary: BoundaryTable,
    pub choice: FairnessChoice,
    /// Metrics at the selected threshold.
    pub overall: MetricVector,
    pub per_group: Vec<GroupMetrics>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub parity: Option<ParityVerdict>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridReport {
    pub config: RunConfig,
    pub grid: GridResult,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareReport {
    pub config: RunConfig,
    pub comparison: MethodComparison,
}

#[derive(Serialize)]
struct WithConfig<'a, T> {
    config: &'a RunConfig,
    #[serde(flatten)]
    body: T,
}

#[derive(Serialize)]
struct ChoiceBody<'a> {
    choice: &'a FairnessChoice,
}

#[derive(Serialize)]
struct ParityBody<'a> {
    parity: &'a ParityVerdict,
    per_group: &'a [GroupMetrics],
}

/// Writes files into one directory and remembers their paths.
pub struct Emitter {
    dir: PathBuf,
    formats: Vec<Format>,
    pub written: Vec<PathBuf>,
}

impl Emitter {
    pub fn new(dir: &Path, formats: &[Format]) -> Result<Self> {
        std::fs::create_dir_all(dir)
            .with_context(|| format!("creating output directory {}", dir.display()))?;
        Ok(Emitter {
            dir: dir.to_path_buf(),
            formats: formats.to_vec(),
            written: Vec::new(),
        })
    }

    pub fn wants(&self, f: Format) -> bool {
        self.formats.contains(&f)
    }

    pub fn write(&mut self, name: &str, contents: &str) -> Result<()> {
        let path = self.dir.join(name);
        std::fs::write(&path, contents).with_context(|| format!("writing {}", path.display()))?;
        log::info!("wrote {}", path.display());
        self.written.push(path);
        Ok(())
    }

    pub fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        self.write(name, &text)
    }
}

pub fn emit_audit(report: &AuditReport, out: &mut Emitter) -> Result<()> {
    let config = &report.config;
    if out.wants(Format::Json) {
        let name = if report.parity.is_some() { AUDIT_JSON } else { THRESHOLDS_JSON };
        out.json(name, report)?;
        out.json(CHOICE_JSON, &WithConfig { config, body: ChoiceBody { choice: &report.choice } })?;
        if let Some(parity) = &report.parity {
            out.json(
                PARITY_JSON,
                &WithConfig {
                    config,
                    body: ParityBody {
                        parity,
                        per_group: &report.per_group,
                    },
                },
            )?;
        }
    }
    // the data behind the chart is always written with it
    if out.wants(Format::Csv) || out.wants(Format::Svg) {
        out.write(BOUNDARY_CSV, &render::boundary_csv(&report.boundary)?)?;
    }
    if out.wants(Format::Svg) {
        out.write(BOUNDARY_SVG, &svg::boundary_svg(&report.boundary, Some(&report.choice)))?;
    }
    if out.wants(Format::Md) {
        out.write(REPORT_MD, &render::audit_markdown(report))?;
    }
    Ok(())
}

pub fn emit_grid(report: &GridReport, out: &mut Emitter) -> Result<()> {
    if out.wants(Format::Json) {
        out.json(GRID_JSON, report)?;
    }
    if out.wants(Format::Csv) {
        out.write(GRID_CSV, &render::grid_csv(&report.grid)?)?;
    }
    if out.wants(Format::Md) {
        out.write(REPORT_MD, &render::grid_markdown(report))?;
    }
    Ok(())
}

pub fn emit_compare(report: &CompareReport, out: &mut Emitter) -> Result<()> {
    if out.wants(Format::Json) {
        out.json(COMPARE_JSON, report)?;
    }
    if out.wants(Format::Csv) {
        out.write(COMPARE_CSV, &render::compare_csv(&report.comparison)?)?;
    }
    if out.wants(Format::Md) {
        out.write(REPORT_MD, &render::compare_markdown(report))?;
    }
    Ok(())
}
