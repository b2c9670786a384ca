//! Suppression baselines: one fingerprint per line, optional `# reason`.

use std::collections::BTreeMap;
use std::path::Path;

use thiserror::Error;

use crate::finding::{Finding, Fingerprint};

#[derive(Debug, Error)]
pub enum SuppressionError {
    #[error("cannot read suppression file {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("{origin}:{line}: {message}")]
    Malformed {
        origin: String,
        line: usize,
        message: String,
    },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Suppression {
    pub fingerprint: Fingerprint,
    pub reason: Option<String>,
    pub line: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SuppressionFile {
    pub entries: Vec<Suppression>,
}

impl SuppressionFile {
    pub fn parse(text: &str, origin: &str) -> Result<Self, SuppressionError> {
        let mut entries = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (fp_text, reason) = match line.split_once('#') {
                Some((fp, r)) => (fp.trim(), Some(r.trim().to_string()).filter(|r| !r.is_empty())),
                None => (line, None),
            };
            let fingerprint = fp_text
                .parse::<Fingerprint>()
                .map_err(|_| SuppressionError::Malformed {
                    origin: origin.to_string(),
                    line: i + 1,
                    message: format!("expected a 16-digit hex fingerprint, found `{fp_text}`"),
                })?;
            entries.push(Suppression {
                fingerprint,
                reason,
                line: i + 1,
            });
        }
        Ok(SuppressionFile { entries })
    }

    pub fn load(path: &Path) -> Result<Self, SuppressionError> {
        let text = std::fs::read_to_string(path).map_err(|source| SuppressionError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::parse(&text, &path.display().to_string())
    }

    /// A baseline that suppresses every finding given, one line each with
    /// the finding's location as the reason.
    pub fn baseline(findings: &[Finding]) -> String {
        let mut lines: BTreeMap<String, String> = BTreeMap::new();
        for f in findings {
            lines.entry(f.fingerprint.to_string()).or_insert_with(|| {
                format!(
                    "CWE-{} {} {}:{}",
                    f.cwe.id(),
                    f.kind,
                    f.primary_loc.file,
                    f.primary_loc.line
                )
            });
        }
        lines.into_iter().map(|(fp, why)| format!("{fp} # {why}\n")).collect()
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Applied {
    pub kept: Vec<Finding>,
    pub suppressed: usize,
    /// Entries that matched no finding, in file order.
    pub stale: Vec<Fingerprint>,
}

pub fn apply_suppressions(findings: Vec<Finding>, file: &SuppressionFile) -> Applied {
    let wanted: BTreeMap<Fingerprint, usize> = file.entries.iter().map(|e| (e.fingerprint, 0)).collect();
    let mut hits = wanted;
    let mut kept = Vec::with_capacity(findings.len());
    let mut suppressed = 0;
    for f in findings {
        match hits.get_mut(&f.fingerprint) {
            Some(n) => {
                *n += 1;
                suppressed += 1;
            }
            None => kept.push(f),
        }
    }
    let mut stale = Vec::new();
    for e in &file.entries {
        if hits[&e.fingerprint] == 0 && !stale.contains(&e.fingerprint) {
            stale.push(e.fingerprint);
        }
    }
    Applied {
        kept,
        suppressed,
        stale,
    }
}
