use std::fs;
use std::path::Path;

use serde::Serialize;

use super::metrics::MetricsTuple;
use super::runner::{EvaluationReport, NamedTest};
use crate::error::{Error, Result};

pub const REPORT_CSV: &str = "report.csv";
pub const REPORT_MD: &str = "report.md";
pub const STATS_JSON: &str = "stats.json";

#[derive(Debug, Serialize)]
struct CsvRow<'a> {
    experiment_id: &'a str,
    protocol: String,
    model_variant: String,
    accuracy: f64,
    precision: f64,
    recall: f64,
    f1: f64,
}

fn rows(report: &EvaluationReport) -> Vec<(String, MetricsTuple)> {
    let mut out: Vec<(String, MetricsTuple)> =
        report.rows.iter().map(|r| (r.experiment_id.clone(), r.metrics)).collect();
    if report.rows.len() > 1 {
        out.push(("mean".into(), report.mean));
    }
    out
}

pub fn render_csv(report: &EvaluationReport) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for (id, m) in rows(report) {
        w.serialize(CsvRow {
            experiment_id: &id,
            protocol: report.protocol.to_string(),
            model_variant: report.variant.to_string(),
            accuracy: m.accuracy,
            precision: m.precision,
            recall: m.recall,
            f1: m.f1,
        })?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Validation(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

pub fn render_markdown(report: &EvaluationReport) -> String {
    let mut s = format!(
        "# Evaluation: {} / {}\n\n| experiment | A | P | R | F1 |\n|---|---|---|---|---|\n",
        report.protocol, report.variant
    );
    for (id, m) in rows(report) {
        s.push_str(&format!(
            "| {id} | {:.4} | {:.4} | {:.4} | {:.4} |\n",
            m.accuracy, m.precision, m.recall, m.f1
        ));
    }
    if report.stratified {
        s.push_str("\nTrain/test split stratified by label.\n");
    }
    let degenerate: usize = report.rows.iter().map(|r| r.degenerate).sum();
    if degenerate > 0 {
        s.push_str(&format!("\n{degenerate} prediction(s) had a zero-norm representation.\n"));
    }
    if !report.tests.is_empty() {
        s.push_str("\n## Tests\n\n| test | statistic | p | method | alternative |\n|---|---|---|---|---|\n");
        for t in &report.tests {
            s.push_str(&format!(
                "| {} | {} | {:.6} | {:?} | {:?} |\n",
                t.name, t.result.statistic, t.result.p_value, t.result.method, t.result.alternative
            ));
        }
    }
    s
}

/// Write report.csv, report.md and stats.json into `dir`.
pub fn write_report(report: &EvaluationReport, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let put = |name: &str, text: String| {
        let p = dir.join(name);
        fs::write(&p, text).map_err(|e| Error::io(p, e))
    };
    put(REPORT_CSV, render_csv(report)?)?;
    put(REPORT_MD, render_markdown(report))?;
    put(STATS_JSON, stats_json(&report.tests)?)
}

pub fn stats_json(tests: &[NamedTest]) -> Result<String> {
    Ok(serde_json::to_string_pretty(tests)?)
}
