//! CSV, JSON and markdown output of study results.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::study::run::{Record, StudyResult};

pub const CSV_HEADER: &str = "study,epsilon,delta,h,metric,value";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ReportFormat {
    Csv,
    Json,
    MarkdownSummary,
}

/// Rows in order, floats in shortest round-trip form.
pub fn records_to_csv<'a>(records: impl IntoIterator<Item = &'a Record>) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in records {
        let _ = writeln!(out, "{},{},{},{},{},{}", r.study, r.epsilon, r.delta, r.h, r.metric, r.value);
    }
    out
}

pub fn markdown_summary(results: &[StudyResult]) -> String {
    let mut out = String::from("# Study summary\n\n| study | metric | measured | threshold | verdict |\n|---|---|---|---|---|\n");
    for r in results {
        for v in &r.verdicts {
            let measured = v.value.map_or("missing".to_string(), |x| format!("{x:.6e}"));
            let _ = writeln!(
                out,
                "| {} | {} | {} | {} | {} |",
                r.study.name(),
                v.metric,
                measured,
                v.threshold.describe(),
                if v.pass { "PASS" } else { "FAIL" }
            );
        }
    }
    let failed = results.iter().filter(|r| !r.passed()).count();
    let _ = writeln!(out, "\n{} of {} studies passed.", results.len() - failed, results.len());
    for r in results {
        let _ = writeln!(out, "\n- {}: config {}", r.study.name(), r.provenance.config_hash);
    }
    out
}

pub fn render(results: &[StudyResult], format: ReportFormat) -> Result<String> {
    if results.is_empty() {
        return Err(Error::InvalidInput("no results to report".into()));
    }
    Ok(match format {
        ReportFormat::Csv => records_to_csv(results.iter().flat_map(|r| &r.records)),
        ReportFormat::Json => serde_json::to_string_pretty(results)? + "\n",
        ReportFormat::MarkdownSummary => markdown_summary(results),
    })
}

pub fn emit_report(results: &[StudyResult], format: ReportFormat, path: &Path) -> Result<()> {
    let text = render(results, format)?;
    write_file(path, &text)
}

pub fn write_file(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn read_json(path: &Path) -> Result<Vec<StudyResult>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(serde_json::from_str(&text)?)
}
