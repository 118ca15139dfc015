//! Check reports and their text, JSON and CSV renderings.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const SCHEMA_VERSION: u32 = 1;
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail,
}

impl Verdict {
    pub fn from_bool(ok: bool) -> Self {
        if ok {
            Verdict::Pass
        } else {
            Verdict::Fail
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Pass => "pass",
            Verdict::Fail => "fail",
        }
    }
}

/// Parameters a check ran with; fields a check does not use are `None`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReportParams {
    pub p: u32,
    pub s: Option<i64>,
    pub f: Option<String>,
    pub n: Option<usize>,
    #[serde(rename = "N")]
    pub precision: Option<i64>,
    pub samples: Option<usize>,
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    pub check: String,
    pub params: ReportParams,
    pub verdict: Verdict,
    /// The verdict covers sampled instances only.
    pub sampled: bool,
    pub summary: String,
    pub details: serde_json::Value,
    /// Inputs (with the per-sample seed) of the first failing instance.
    pub counterexample: Option<serde_json::Value>,
    pub runtime_ms: u64,
    pub tool_version: String,
}

impl CheckReport {
    pub fn passed(&self) -> bool {
        self.verdict == Verdict::Pass
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportDocument {
    pub schema_version: u32,
    pub tool_version: String,
    pub checks: Vec<CheckReport>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ReportFormat {
    Text,
    Json,
    Csv,
}

impl FromStr for ReportFormat {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "text" | "table" | "text-table" => Ok(ReportFormat::Text),
            "json" => Ok(ReportFormat::Json),
            "csv" => Ok(ReportFormat::Csv),
            other => Err(Error::Config(format!("unknown report format {other:?} (text, json, csv)"))),
        }
    }
}

fn opt<T: ToString>(x: &Option<T>) -> String {
    x.as_ref().map_or_else(|| "-".to_string(), ToString::to_string)
}

pub fn render_json(reports: &[CheckReport]) -> Result<String> {
    let doc = ReportDocument {
        schema_version: SCHEMA_VERSION,
        tool_version: TOOL_VERSION.to_string(),
        checks: reports.to_vec(),
    };
    let mut out = serde_json::to_string_pretty(&doc).map_err(|e| Error::Io(e.to_string()))?;
    out.push('\n');
    Ok(out)
}

pub fn parse_json(text: &str) -> Result<ReportDocument> {
    serde_json::from_str(text).map_err(|e| Error::Config(format!("invalid report: {e}")))
}

pub fn render_csv(reports: &[CheckReport]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let io = |e: csv::Error| Error::Io(e.to_string());
    w.write_record(["check", "p", "s", "n", "N", "samples", "seed", "verdict", "runtime_ms"]).map_err(io)?;
    for r in reports {
        let q = &r.params;
        w.write_record([
            r.check.clone(),
            q.p.to_string(),
            opt(&q.s),
            opt(&q.n),
            opt(&q.precision),
            opt(&q.samples),
            q.seed.to_string(),
            r.verdict.as_str().to_string(),
            r.runtime_ms.to_string(),
        ])
        .map_err(io)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::Io(e.to_string()))
}

pub fn render_text(reports: &[CheckReport]) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:<20} {:>3} {:>4} {:>3} {:>5} {:>7} {:>7}  {:<7} summary",
        "check", "p", "s", "n", "N", "samples", "ms", "verdict"
    );
    for r in reports {
        let q = &r.params;
        let verdict = if r.sampled { format!("{} *", r.verdict.as_str()) } else { r.verdict.as_str().to_string() };
        let _ = writeln!(
            out,
            "{:<20} {:>3} {:>4} {:>3} {:>5} {:>7} {:>7}  {:<7} {}",
            r.check,
            q.p,
            opt(&q.s),
            opt(&q.n),
            opt(&q.precision),
            opt(&q.samples),
            r.runtime_ms,
            verdict,
            r.summary
        );
        if let Some(cx) = &r.counterexample {
            let _ = writeln!(out, "    counterexample: {cx}");
        }
    }
    if reports.iter().any(|r| r.sampled) {
        let _ = writeln!(out, "* SAMPLED: verdict covers the sampled instances only");
    }
    out
}

pub fn render(reports: &[CheckReport], format: ReportFormat) -> Result<String> {
    match format {
        ReportFormat::Text => Ok(render_text(reports)),
        ReportFormat::Json => render_json(reports),
        ReportFormat::Csv => render_csv(reports),
    }
}

/// Render `reports` and write them to `path` when given; returns the rendering.
pub fn emit_report(reports: &[CheckReport], format: ReportFormat, path: Option<&Path>) -> Result<String> {
    let text = render(reports, format)?;
    if let Some(path) = path {
        fs::write(path, &text)?;
    }
    Ok(text)
}

/// Zero every timing field, so that reports can be compared byte for byte.
pub fn strip_timing(reports: &mut [CheckReport]) {
    for r in reports {
        r.runtime_ms = 0;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample(verdict: Verdict) -> CheckReport {
        CheckReport {
            check: "lemma_sums".into(),
            params: ReportParams { p: 3, s: None, f: None, n: None, precision: None, samples: None, seed: 7 },
            verdict,
            sampled: false,
            summary: "ok".into(),
            details: serde_json::json!({"values": [0, 2]}),
            counterexample: (verdict == Verdict::Fail).then(|| serde_json::json!({"k": 1})),
            runtime_ms: 3,
            tool_version: TOOL_VERSION.into(),
        }
    }

    #[test]
    fn empty_documents_have_headers() {
        let json = render_json(&[]).unwrap();
        let doc = parse_json(&json).unwrap();
        assert_eq!(doc.schema_version, SCHEMA_VERSION);
        assert!(doc.checks.is_empty());
        assert_eq!(render_csv(&[]).unwrap(), "check,p,s,n,N,samples,seed,verdict,runtime_ms\n");
        assert!(render_text(&[]).starts_with("check"));
    }

    #[test]
    fn json_round_trip() {
        let reports = vec![sample(Verdict::Pass), sample(Verdict::Fail)];
        let doc = parse_json(&render_json(&reports).unwrap()).unwrap();
        assert_eq!(doc.checks, reports);
        assert!(render_json(&reports).unwrap().contains("\"counterexample\": {"));
    }

    #[test]
    fn csv_and_text_rows() {
        let reports = vec![sample(Verdict::Fail)];
        let csv = render_csv(&reports).unwrap();
        assert_eq!(csv.lines().nth(1).unwrap(), "lemma_sums,3,-,-,-,-,7,fail,3");
        assert!(render_text(&reports).contains("counterexample: {\"k\":1}"));
    }

    #[test]
    fn emit_writes_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("r.csv");
        let text = emit_report(&[sample(Verdict::Pass)], ReportFormat::Csv, Some(&path)).unwrap();
        assert_eq!(fs::read_to_string(path).unwrap(), text);
        assert_eq!("json".parse::<ReportFormat>().unwrap(), ReportFormat::Json);
        assert!("xml".parse::<ReportFormat>().is_err());
    }
}
