use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{AggregateStats, CurvePoint, ExperimentSpec, MetricStats};
use crate::error::HarnessError;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReportFormat {
    Json,
    Csv,
}

impl FromStr for ReportFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "json" => Ok(ReportFormat::Json),
            "csv" => Ok(ReportFormat::Csv),
            other => Err(format!("unknown format {other:?} (expected json|csv)")),
        }
    }
}

/// On-disk JSON layout. Timing fields are null unless the run was timed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JsonReport {
    pub schema_version: u32,
    pub spec: ExperimentSpec,
    pub metrics: BTreeMap<String, MetricStats>,
    pub qubit_efficiency: f64,
    pub started_at: Option<String>,
    pub elapsed_ms: Option<u64>,
}

impl From<&AggregateStats> for JsonReport {
    fn from(stats: &AggregateStats) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            spec: stats.spec.clone(),
            metrics: stats.metrics.clone(),
            qubit_efficiency: stats.qubit_efficiency,
            started_at: stats.timing.as_ref().map(|t| t.started_at.clone()),
            elapsed_ms: stats.timing.as_ref().map(|t| t.elapsed_ms),
        }
    }
}

#[derive(Serialize)]
struct CsvRow<'a> {
    metric: &'a str,
    mean: f64,
    std_error: f64,
    ci_low: f64,
    ci_high: f64,
    count: usize,
}

fn csv_writer() -> csv::Writer<Vec<u8>> {
    csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new())
}

fn into_string(w: csv::Writer<Vec<u8>>) -> Result<String, HarnessError> {
    let bytes = w
        .into_inner()
        .map_err(|e| HarnessError::Io(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

pub fn render_report(stats: &AggregateStats, format: ReportFormat) -> Result<String, HarnessError> {
    match format {
        ReportFormat::Json => {
            let mut s = serde_json::to_string_pretty(&JsonReport::from(stats))?;
            s.push('\n');
            Ok(s)
        }
        ReportFormat::Csv => {
            let mut w = csv_writer();
            if stats.metrics.is_empty() {
                w.write_record(["metric", "mean", "std_error", "ci_low", "ci_high", "count"])?;
            }
            for (name, m) in &stats.metrics {
                w.serialize(CsvRow {
                    metric: name,
                    mean: m.mean,
                    std_error: m.std_error,
                    ci_low: m.ci_low,
                    ci_high: m.ci_high,
                    count: m.count,
                })?;
            }
            into_string(w)
        }
    }
}

pub fn emit_report(
    stats: &AggregateStats,
    format: ReportFormat,
    path: &Path,
) -> Result<(), HarnessError> {
    fs::write(path, render_report(stats, format)?)?;
    Ok(())
}

#[derive(Serialize)]
struct CurveReport<'a> {
    schema_version: u32,
    spec: &'a ExperimentSpec,
    points: &'a [CurvePoint],
}

pub fn render_curve(
    spec: &ExperimentSpec,
    points: &[CurvePoint],
    format: ReportFormat,
) -> Result<String, HarnessError> {
    match format {
        ReportFormat::Json => {
            let mut s = serde_json::to_string_pretty(&CurveReport {
                schema_version: SCHEMA_VERSION,
                spec,
                points,
            })?;
            s.push('\n');
            Ok(s)
        }
        ReportFormat::Csv => {
            let mut w = csv_writer();
            if points.is_empty() {
                w.write_record(["k", "detection_rate", "std_error", "trials"])?;
            }
            for p in points {
                w.serialize(p)?;
            }
            into_string(w)
        }
    }
}

pub fn emit_curve(
    spec: &ExperimentSpec,
    points: &[CurvePoint],
    format: ReportFormat,
    path: &Path,
) -> Result<(), HarnessError> {
    fs::write(path, render_curve(spec, points, format)?)?;
    Ok(())
}
