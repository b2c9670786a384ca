//! Text and JSON rendering of a scan.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::finding::{sort_findings, Cwe, Finding};
use crate::loc::Diagnostic;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScannerStats {
    pub relevant_nodes: u64,
    pub keyword_gated_nodes: u64,
    pub hits: u64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ScanStats {
    pub files_analyzed: u64,
    pub files_skipped: u64,
    pub loc: u64,
    pub parse_ms: f64,
    pub scan_ms: f64,
    /// Keyed by CWE number; only enabled scanners appear.
    pub per_scanner: BTreeMap<String, ScannerStats>,
    pub total_nodes: u64,
}

impl ScanStats {
    pub fn scanner(&self, cwe: Cwe) -> Option<&ScannerStats> {
        self.per_scanner.get(&cwe.id().to_string())
    }

    pub fn zero_timings(&mut self) {
        self.parse_ms = 0.0;
        self.scan_ms = 0.0;
    }
}

/// Milliseconds rounded to microsecond precision.
pub fn millis(d: std::time::Duration) -> f64 {
    (d.as_secs_f64() * 1e6).round() / 1e3
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct JsonFinding {
    pub cwe: u32,
    pub kind: String,
    pub module: String,
    pub file: String,
    pub line: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub line2: Option<u32>,
    pub signals: Vec<String>,
    pub keywords: Vec<String>,
    pub severity: String,
    pub message: String,
    pub fingerprint: String,
}

impl From<&Finding> for JsonFinding {
    fn from(f: &Finding) -> Self {
        JsonFinding {
            cwe: f.cwe.id(),
            kind: f.kind.clone(),
            module: f.module.clone(),
            file: f.primary_loc.file.to_string(),
            line: f.primary_loc.line,
            line2: f.secondary_loc.as_ref().map(|l| l.line),
            signals: f.signals.clone(),
            keywords: f.matched_keywords.clone(),
            severity: f.severity.as_str().to_string(),
            message: f.message.clone(),
            fingerprint: f.fingerprint.to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct JsonDiagnostic {
    pub file: String,
    pub line: u32,
    pub column: u32,
    pub message: String,
}

impl From<&Diagnostic> for JsonDiagnostic {
    fn from(d: &Diagnostic) -> Self {
        JsonDiagnostic {
            file: d.loc.file.to_string(),
            line: d.loc.line,
            column: d.loc.col,
            message: d.message.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SkippedFile {
    pub file: String,
    pub diagnostics: Vec<JsonDiagnostic>,
}

/// Everything a renderer needs. Findings are kept sorted.
#[derive(Debug, Clone, Default)]
pub struct Report {
    pub findings: Vec<Finding>,
    pub stats: ScanStats,
    pub skipped: Vec<SkippedFile>,
    pub diagnostics: Vec<Diagnostic>,
    pub suppressed: u64,
    pub stale_suppressions: Vec<String>,
}

impl Report {
    pub fn new(mut findings: Vec<Finding>, stats: ScanStats) -> Self {
        sort_findings(&mut findings);
        Report {
            findings,
            stats,
            ..Report::default()
        }
    }

    pub fn count(&self, cwe: Cwe) -> usize {
        self.findings.iter().filter(|f| f.cwe == cwe).count()
    }
}

/// The JSON document, in emission order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JsonReport {
    pub version: u32,
    pub findings: Vec<JsonFinding>,
    pub stats: ScanStats,
    #[serde(default)]
    pub skipped: Vec<SkippedFile>,
    #[serde(default)]
    pub diagnostics: Vec<JsonDiagnostic>,
    #[serde(default)]
    pub suppressed: u64,
    #[serde(default)]
    pub stale_suppressions: Vec<String>,
}

impl From<&Report> for JsonReport {
    fn from(r: &Report) -> Self {
        JsonReport {
            version: SCHEMA_VERSION,
            findings: r.findings.iter().map(JsonFinding::from).collect(),
            stats: r.stats.clone(),
            skipped: r.skipped.clone(),
            diagnostics: r.diagnostics.iter().map(JsonDiagnostic::from).collect(),
            suppressed: r.suppressed,
            stale_suppressions: r.stale_suppressions.clone(),
        }
    }
}

pub fn render_json(report: &Report) -> String {
    let mut s = serde_json::to_string_pretty(&JsonReport::from(report)).expect("report serializes");
    s.push('\n');
    s
}

pub fn parse_json(text: &str) -> serde_json::Result<JsonReport> {
    serde_json::from_str(text)
}

#[derive(Debug, Clone, Copy, Default)]
pub struct TextOptions {
    /// Append per-scanner node statistics.
    pub stats: bool,
}

pub fn finding_line(f: &Finding) -> String {
    let mut line = format!(
        "CWE-{} {} {}:{} [{}] {}",
        f.cwe.id(),
        f.severity,
        f.primary_loc.file,
        f.primary_loc.line,
        f.kind,
        f.message
    );
    if !f.signals.is_empty() {
        let _ = write!(line, " (signals: {})", f.signals.join(", "));
    }
    line
}

pub fn render_text(report: &Report, opts: TextOptions) -> String {
    let mut out = String::new();
    for f in &report.findings {
        out.push_str(&finding_line(f));
        out.push('\n');
    }
    for s in &report.skipped {
        for d in &s.diagnostics {
            let _ = writeln!(out, "skipped {}:{}: {}", d.file, d.line, d.message);
        }
    }
    for d in &report.diagnostics {
        let _ = writeln!(out, "note {d}");
    }
    let st = &report.stats;
    out.push_str("---\n");
    let _ = writeln!(
        out,
        "files: {} analyzed, {} skipped, {} lines",
        st.files_analyzed, st.files_skipped, st.loc
    );
    let counts: Vec<String> = Cwe::ALL
        .iter()
        .map(|c| format!("CWE-{}: {}", c.id(), report.count(*c)))
        .collect();
    let _ = writeln!(out, "findings: {} ({})", report.findings.len(), counts.join(", "));
    if report.suppressed > 0 || !report.stale_suppressions.is_empty() {
        let _ = writeln!(
            out,
            "suppressed: {}, stale suppressions: {}",
            report.suppressed,
            report.stale_suppressions.len()
        );
        for fp in &report.stale_suppressions {
            let _ = writeln!(out, "stale {fp}");
        }
    }
    let _ = writeln!(out, "time: parse {:.3} ms, scan {:.3} ms", st.parse_ms, st.scan_ms);
    if opts.stats {
        let _ = writeln!(out, "nodes: {}", st.total_nodes);
        for (id, s) in &st.per_scanner {
            let _ = writeln!(
                out,
                "CWE-{id}: relevant {}, keyword-gated {}, hits {}",
                s.relevant_nodes, s.keyword_gated_nodes, s.hits
            );
        }
    }
    out
}
