use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::loc::SourceLoc;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(into = "u32", try_from = "u32")]
pub enum Cwe {
    C1234,
    C1271,
    C1245,
    C1280,
    C1262,
}

impl Cwe {
    pub const ALL: [Cwe; 5] = [Cwe::C1234, Cwe::C1271, Cwe::C1245, Cwe::C1280, Cwe::C1262];

    pub fn id(self) -> u32 {
        match self {
            Cwe::C1234 => 1234,
            Cwe::C1271 => 1271,
            Cwe::C1245 => 1245,
            Cwe::C1280 => 1280,
            Cwe::C1262 => 1262,
        }
    }

    pub fn from_id(id: u32) -> Option<Cwe> {
        Cwe::ALL.into_iter().find(|c| c.id() == id)
    }

    pub fn default_severity(self) -> Severity {
        match self {
            Cwe::C1280 => Severity::Info,
            _ => Severity::Warning,
        }
    }
}

impl From<Cwe> for u32 {
    fn from(c: Cwe) -> u32 {
        c.id()
    }
}

impl TryFrom<u32> for Cwe {
    type Error = String;

    fn try_from(id: u32) -> Result<Self, Self::Error> {
        Cwe::from_id(id).ok_or_else(|| format!("unsupported CWE id {id}"))
    }
}

impl fmt::Display for Cwe {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.id())
    }
}

impl FromStr for Cwe {
    type Err = String;

    /// Accepts `1234` or `CWE-1234` (any case).
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let t = s.trim();
        let digits = t
            .get(..4)
            .filter(|p| p.eq_ignore_ascii_case("cwe-"))
            .map_or(t, |_| &t[4..]);
        let id: u32 = digits.parse().map_err(|_| format!("invalid CWE id `{s}`"))?;
        Cwe::try_from(id)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Warning,
    Info,
}

impl Severity {
    pub fn as_str(self) -> &'static str {
        match self {
            Severity::Warning => "warning",
            Severity::Info => "info",
        }
    }
}

impl fmt::Display for Severity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Severity {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "warning" => Ok(Severity::Warning),
            "info" => Ok(Severity::Info),
            _ => Err(format!("invalid severity `{s}` (expected warning or info)")),
        }
    }
}

/// 64-bit FNV-1a digest identifying a finding independently of line numbers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Fingerprint(pub u64);

impl fmt::Display for Fingerprint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:016x}", self.0)
    }
}

impl FromStr for Fingerprint {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s.len() != 16 || !s.bytes().all(|b| b.is_ascii_hexdigit()) {
            return Err(format!("`{s}` is not a 16-digit hex fingerprint"));
        }
        u64::from_str_radix(s, 16).map(Fingerprint).map_err(|e| e.to_string())
    }
}

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

pub fn fnv1a64(bytes: &[u8]) -> u64 {
    bytes
        .iter()
        .fold(FNV_OFFSET, |h, &b| (h ^ u64::from(b)).wrapping_mul(FNV_PRIME))
}

/// `\` becomes `/` and leading `./` segments are dropped.
pub fn normalize_path(path: &str) -> String {
    let mut p = path.replace('\\', "/");
    while let Some(rest) = p.strip_prefix("./") {
        p = rest.to_string();
    }
    p
}

/// The exact byte string the fingerprint is computed over: the fields joined
/// by the unit separator 0x1f, signals joined by `,`.
pub fn canonical_key(cwe: Cwe, kind: &str, module: &str, signals: &[String], path: &str) -> String {
    let fields = [
        cwe.id().to_string(),
        kind.to_string(),
        module.to_string(),
        signals.join(","),
        normalize_path(path),
    ];
    fields.join("\u{1f}")
}

pub fn fingerprint(cwe: Cwe, kind: &str, module: &str, signals: &[String], path: &str) -> Fingerprint {
    Fingerprint(fnv1a64(canonical_key(cwe, kind, module, signals, path).as_bytes()))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Finding {
    pub cwe: Cwe,
    pub kind: String,
    pub module: String,
    pub primary_loc: SourceLoc,
    pub secondary_loc: Option<SourceLoc>,
    pub signals: Vec<String>,
    pub matched_keywords: Vec<String>,
    pub message: String,
    pub severity: Severity,
    pub fingerprint: Fingerprint,
}

impl Finding {
    /// Builds a finding with the CWE's default severity and a fingerprint
    /// over the location's file path.
    pub fn new(
        cwe: Cwe,
        kind: &str,
        module: &str,
        primary_loc: SourceLoc,
        signals: Vec<String>,
        message: String,
    ) -> Self {
        debug_assert!(!message.is_empty());
        let fp = fingerprint(cwe, kind, module, &signals, &primary_loc.file);
        Finding {
            cwe,
            kind: kind.to_string(),
            module: module.to_string(),
            primary_loc,
            secondary_loc: None,
            signals,
            matched_keywords: Vec::new(),
            message,
            severity: cwe.default_severity(),
            fingerprint: fp,
        }
    }

    pub fn with_secondary(mut self, loc: SourceLoc) -> Self {
        self.secondary_loc = Some(loc);
        self
    }

    pub fn with_keywords(mut self, mut kws: Vec<String>) -> Self {
        kws.sort();
        kws.dedup();
        self.matched_keywords = kws;
        self
    }

    pub fn with_severity(mut self, s: Severity) -> Self {
        self.severity = s;
        self
    }

    /// Recomputes the fingerprint against `path` (normally the file path
    /// relative to the scan root).
    pub fn rehash(&mut self, path: &str) {
        self.fingerprint = fingerprint(self.cwe, &self.kind, &self.module, &self.signals, path);
    }

    /// Report ordering: file, line, CWE, kind, then the remaining fields so
    /// that the order is total.
    pub fn sort_key(&self) -> impl Ord + '_ {
        (
            &self.primary_loc.file,
            self.primary_loc.line,
            self.cwe.id(),
            &self.kind,
            self.primary_loc.col,
            &self.signals,
            self.secondary_loc.as_ref().map(|l| l.line),
            &self.message,
        )
    }
}

pub fn sort_findings(findings: &mut [Finding]) {
    findings.sort_by(|a, b| a.sort_key().cmp(&b.sort_key()));
}
