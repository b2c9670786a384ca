//! File discovery, ordering and the parse / scan pipeline.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::io;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use thiserror::Error;
use walkdir::WalkDir;

use crate::ast::Module;
use crate::finding::{normalize_path, sort_findings, Cwe, Finding, Severity};
use crate::lexer::{tokenize, Token, TokenKind};
use crate::loc::Diagnostic;
use crate::parser::parse;
use crate::preprocess::{preprocess_with, FsLoader, IncludeLoader, MacroTable};
use crate::report::{millis, JsonDiagnostic, Report, ScanStats, ScannerStats, SkippedFile};
use crate::rules::{Rulebook, RulebookError};
use crate::scanners::{run_scanner, ModuleContext, NodeTally};
use crate::scope::build_scope;
use crate::suppress::{apply_suppressions, SuppressionError, SuppressionFile};
use crate::visit::count_nodes;

pub const EXTENSIONS: &[&str] = &["v", "sv"];

#[derive(Debug, Error)]
pub enum ScanError {
    #[error("no input paths given")]
    NoRoots,
    #[error("no scanners enabled")]
    NoScanners,
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: io::Error },
    #[error(transparent)]
    Rules(#[from] RulebookError),
    #[error(transparent)]
    Suppressions(#[from] SuppressionError),
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum OutputFormat {
    #[default]
    Text,
    Json,
}

/// What to run and how to post-process it; independent of where the
/// sources come from.
#[derive(Debug, Clone)]
pub struct ScanOptions {
    pub cwes: Vec<Cwe>,
    pub severity: BTreeMap<Cwe, Severity>,
    /// Zero the timing fields so that output is reproducible.
    pub stable_output: bool,
}

impl Default for ScanOptions {
    fn default() -> Self {
        ScanOptions {
            cwes: Cwe::ALL.to_vec(),
            severity: BTreeMap::new(),
            stable_output: false,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ScanConfig {
    pub roots: Vec<PathBuf>,
    pub options: ScanOptions,
    pub rules: Option<PathBuf>,
    pub format: OutputFormat,
    pub stats: bool,
    pub suppressions: Option<PathBuf>,
    pub fail_on_findings: bool,
}

impl ScanConfig {
    pub fn new(roots: Vec<PathBuf>) -> Self {
        ScanConfig {
            roots,
            options: ScanOptions::default(),
            rules: None,
            format: OutputFormat::Text,
            stats: false,
            suppressions: None,
            fail_on_findings: false,
        }
    }
}

/// One input file. `path` is what locations and include resolution use;
/// `rel` is the root-relative path that fingerprints are computed over.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Source {
    pub path: String,
    pub rel: String,
    pub text: String,
}

impl Source {
    pub fn new(path: impl Into<String>, text: impl Into<String>) -> Self {
        let path = path.into();
        Source {
            rel: normalize_path(&path),
            path,
            text: text.into(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct FileStats {
    pub file: String,
    pub skipped: bool,
    pub total_nodes: u64,
    pub tallies: BTreeMap<Cwe, NodeTally>,
}

#[derive(Debug, Clone, Default)]
pub struct ScanOutcome {
    pub report: Report,
    pub per_file: Vec<FileStats>,
    /// Root-relative paths in processing order.
    pub order: Vec<String>,
}

impl ScanOutcome {
    pub fn findings(&self) -> &[Finding] {
        &self.report.findings
    }

    pub fn exit_code(&self, fail_on_findings: bool) -> i32 {
        i32::from(fail_on_findings && !self.report.findings.is_empty())
    }
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> ScanError + '_ {
    move |source| ScanError::Io {
        path: path.display().to_string(),
        source,
    }
}

fn read_lossy(path: &Path) -> Result<String, ScanError> {
    let bytes = std::fs::read(path).map_err(io_err(path))?;
    Ok(String::from_utf8_lossy(&bytes).into_owned())
}

fn has_hdl_extension(p: &Path) -> bool {
    p.extension()
        .and_then(|e| e.to_str())
        .is_some_and(|e| EXTENSIONS.contains(&e))
}

/// Collects `*.v` / `*.sv` under each root (a root that is a file is taken
/// as is) and returns them in analysis order.
pub fn discover(roots: &[PathBuf]) -> Result<Vec<Source>, ScanError> {
    if roots.is_empty() {
        return Err(ScanError::NoRoots);
    }
    let mut seen = HashSet::new();
    let mut sources = Vec::new();
    for root in roots {
        let meta = std::fs::metadata(root).map_err(io_err(root))?;
        if meta.is_file() {
            let rel = root
                .file_name()
                .map(|n| n.to_string_lossy().into_owned())
                .unwrap_or_default();
            push_source(&mut sources, &mut seen, root, rel)?;
            continue;
        }
        for entry in WalkDir::new(root).sort_by_file_name() {
            let entry = entry.map_err(|e| {
                let path = e.path().unwrap_or(root).to_path_buf();
                ScanError::Io {
                    path: path.display().to_string(),
                    source: e.into(),
                }
            })?;
            if !entry.file_type().is_file() || !has_hdl_extension(entry.path()) {
                continue;
            }
            let rel = entry
                .path()
                .strip_prefix(root)
                .unwrap_or(entry.path())
                .to_string_lossy()
                .into_owned();
            push_source(&mut sources, &mut seen, entry.path(), rel)?;
        }
    }
    Ok(order_sources(sources, &mut FsLoader))
}

fn push_source(
    sources: &mut Vec<Source>,
    seen: &mut HashSet<PathBuf>,
    path: &Path,
    rel: String,
) -> Result<(), ScanError> {
    let key = std::fs::canonicalize(path).unwrap_or_else(|_| path.to_path_buf());
    if !seen.insert(key) {
        return Ok(());
    }
    sources.push(Source {
        path: path.to_string_lossy().into_owned(),
        rel: normalize_path(&rel),
        text: read_lossy(path)?,
    });
    Ok(())
}

const BUILTIN_DIRECTIVES: &[&str] = &[
    "define",
    "undef",
    "ifdef",
    "ifndef",
    "elsif",
    "else",
    "endif",
    "include",
    "timescale",
    "default_nettype",
    "line",
    "pragma",
    "begin_keywords",
    "end_keywords",
    "resetall",
    "celldefine",
    "endcelldefine",
    "nounconnected_drive",
    "unconnected_drive",
];

#[derive(Debug, Default)]
struct MacroDeps {
    defines: BTreeSet<String>,
    uses: BTreeSet<String>,
    includes: BTreeSet<String>,
}

fn macro_deps(tokens: &[Token], loader: &mut dyn IncludeLoader, visited: &mut HashSet<String>) -> MacroDeps {
    let mut deps = MacroDeps::default();
    for (i, t) in tokens.iter().enumerate() {
        if !t.is_directive() {
            continue;
        }
        let name = &t.lexeme[1..];
        let next = tokens.get(i + 1).filter(|n| n.loc.line == t.loc.line);
        match name {
            "define" => {
                if let Some(n) = next {
                    deps.defines.insert(n.lexeme.clone());
                }
            }
            "include" => {
                let Some(n) = next.filter(|n| n.kind == TokenKind::StringLiteral) else {
                    continue;
                };
                let target = n.lexeme.trim_matches('"');
                let base = Path::new(&*t.loc.file).parent().unwrap_or(Path::new(""));
                let path = base.join(target);
                let key = normalize_path(&path.to_string_lossy());
                deps.includes.insert(key.clone());
                // Macros defined by a header count as defined by its includer.
                if visited.insert(key.clone()) {
                    if let Ok(text) = loader.load(&path) {
                        let (toks, _) = tokenize(&text, &key);
                        let inner = macro_deps(&toks, loader, visited);
                        deps.defines.extend(inner.defines);
                        deps.uses.extend(inner.uses);
                    }
                }
            }
            n if BUILTIN_DIRECTIVES.contains(&n) => {}
            n => {
                deps.uses.insert(n.to_string());
            }
        }
    }
    deps
}

/// Orders files so that a file defining a macro, or included by another
/// listed file, comes before its users. Ties and cycles fall back to
/// lexicographic order of the relative path.
pub fn order_sources(mut sources: Vec<Source>, loader: &mut dyn IncludeLoader) -> Vec<Source> {
    sources.sort_by(|a, b| (&a.rel, &a.path).cmp(&(&b.rel, &b.path)));
    let deps: Vec<MacroDeps> = sources
        .iter()
        .map(|s| {
            let (toks, _) = tokenize(&s.text, &s.path);
            macro_deps(&toks, loader, &mut HashSet::new())
        })
        .collect();
    let n = sources.len();
    let by_path: HashMap<String, usize> = sources
        .iter()
        .enumerate()
        .map(|(i, s)| (normalize_path(&s.path), i))
        .collect();
    let mut definers: HashMap<&str, Vec<usize>> = HashMap::new();
    for (i, d) in deps.iter().enumerate() {
        for m in &d.defines {
            definers.entry(m.as_str()).or_default().push(i);
        }
    }
    let mut succ: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); n];
    for (i, d) in deps.iter().enumerate() {
        let before = d
            .uses
            .iter()
            .filter(|m| !d.defines.contains(*m))
            .flat_map(|m| definers.get(m.as_str()).into_iter().flatten().copied())
            .chain(d.includes.iter().filter_map(|p| by_path.get(p).copied()));
        for j in before {
            if j != i {
                succ[j].insert(i);
            }
        }
    }
    let mut indegree = vec![0usize; n];
    for s in &succ {
        for &j in s {
            indegree[j] += 1;
        }
    }
    let mut ready: BTreeSet<usize> = (0..n).filter(|&i| indegree[i] == 0).collect();
    let mut done = vec![false; n];
    let mut order = Vec::with_capacity(n);
    while order.len() < n {
        let next = match ready.pop_first() {
            Some(i) => i,
            // A cycle: release the first remaining file.
            None => (0..n).find(|&i| !done[i]).expect("files remain"),
        };
        if done[next] {
            continue;
        }
        done[next] = true;
        order.push(next);
        for &j in &succ[next] {
            indegree[j] = indegree[j].saturating_sub(1);
            if indegree[j] == 0 && !done[j] {
                ready.insert(j);
            }
        }
    }
    let mut slots: Vec<Option<Source>> = sources.into_iter().map(Some).collect();
    order
        .into_iter()
        .map(|i| slots[i].take().expect("each index once"))
        .collect()
}

/// Include loader that serves in-memory sources first, then the disk.
struct MemLoader {
    files: HashMap<String, String>,
}

impl IncludeLoader for MemLoader {
    fn load(&mut self, path: &Path) -> io::Result<String> {
        match self.files.get(&normalize_path(&path.to_string_lossy())) {
            Some(text) => Ok(text.clone()),
            None => FsLoader.load(path),
        }
    }
}

enum Stage1 {
    Tokens(Vec<Token>),
    Skipped(Vec<Diagnostic>),
}

struct ParsedFile {
    modules: Vec<Module>,
    skipped: Option<Vec<Diagnostic>>,
}

struct ModuleResult {
    file: usize,
    total_nodes: u64,
    tallies: BTreeMap<Cwe, NodeTally>,
    findings: Vec<Finding>,
    diagnostics: Vec<Diagnostic>,
}

/// Runs the whole pipeline over in-memory sources. Input order does not
/// matter; files are ordered first.
pub fn scan_sources(sources: Vec<Source>, rules: &Rulebook, opts: &ScanOptions) -> ScanOutcome {
    let t_parse = Instant::now();
    let mut loader = MemLoader {
        files: sources
            .iter()
            .map(|s| (normalize_path(&s.path), s.text.clone()))
            .collect(),
    };
    let sources = order_sources(sources, &mut loader);

    // Macro definitions flow from file to file, so this part is sequential.
    let mut macros = MacroTable::default();
    let mut notes: Vec<Diagnostic> = Vec::new();
    let stage1: Vec<Stage1> = sources
        .iter()
        .map(|s| {
            let (tokens, lex_diags) = tokenize(&s.text, &s.path);
            if !lex_diags.is_empty() {
                return Stage1::Skipped(lex_diags);
            }
            let pre = preprocess_with(tokens, &mut macros, &mut loader);
            notes.extend(pre.diagnostics);
            Stage1::Tokens(pre.tokens)
        })
        .collect();

    let parsed: Vec<ParsedFile> = stage1
        .into_par_iter()
        .map(|s| match s {
            Stage1::Skipped(d) => ParsedFile {
                modules: Vec::new(),
                skipped: Some(d),
            },
            Stage1::Tokens(tokens) => {
                let out = parse(&tokens);
                if out.skipped {
                    ParsedFile {
                        modules: Vec::new(),
                        skipped: Some(out.diagnostics),
                    }
                } else {
                    ParsedFile {
                        modules: out.modules,
                        skipped: None,
                    }
                }
            }
        })
        .collect();
    let parse_time = t_parse.elapsed();

    let t_scan = Instant::now();
    let work: Vec<(usize, &Module)> = parsed
        .iter()
        .enumerate()
        .flat_map(|(i, p)| p.modules.iter().map(move |m| (i, m)))
        .collect();
    let rel_of: HashMap<String, &str> = sources.iter().map(|s| (s.path.clone(), s.rel.as_str())).collect();
    let results: Vec<ModuleResult> = work
        .par_iter()
        .map(|&(file, module)| {
            let scope = build_scope(module);
            let ctx = ModuleContext {
                module,
                scope: &scope,
                rules,
            };
            let mut r = ModuleResult {
                file,
                total_nodes: count_nodes(module),
                tallies: BTreeMap::new(),
                findings: Vec::new(),
                diagnostics: scope.diagnostics.clone(),
            };
            for &cwe in &opts.cwes {
                let out = run_scanner(cwe, &ctx);
                *r.tallies.entry(cwe).or_default() += out.tally;
                r.diagnostics.extend(out.diagnostics);
                for mut f in out.findings {
                    let path = rel_of
                        .get(&*f.primary_loc.file)
                        .map(|s| s.to_string())
                        .unwrap_or_else(|| normalize_path(&f.primary_loc.file));
                    f.rehash(&path);
                    if let Some(&sev) = opts.severity.get(&cwe) {
                        f.severity = sev;
                    }
                    r.findings.push(f);
                }
            }
            r
        })
        .collect();
    let scan_time = t_scan.elapsed();

    let mut per_file: Vec<FileStats> = sources
        .iter()
        .zip(&parsed)
        .map(|(s, p)| FileStats {
            file: s.rel.clone(),
            skipped: p.skipped.is_some(),
            total_nodes: 0,
            tallies: opts.cwes.iter().map(|&c| (c, NodeTally::default())).collect(),
        })
        .collect();
    let mut findings = Vec::new();
    let mut stats = ScanStats::default();
    for &c in &opts.cwes {
        stats.per_scanner.insert(c.id().to_string(), ScannerStats::default());
    }
    for r in results {
        let fs = &mut per_file[r.file];
        fs.total_nodes += r.total_nodes;
        stats.total_nodes += r.total_nodes;
        for (cwe, t) in &r.tallies {
            *fs.tallies.entry(*cwe).or_default() += *t;
            let s = stats.per_scanner.get_mut(&cwe.id().to_string()).expect("enabled");
            s.relevant_nodes += t.relevant;
            s.keyword_gated_nodes += t.gated;
        }
        for f in &r.findings {
            stats
                .per_scanner
                .get_mut(&f.cwe.id().to_string())
                .expect("enabled")
                .hits += 1;
        }
        findings.extend(r.findings);
        notes.extend(r.diagnostics);
    }

    let mut skipped = Vec::new();
    for (s, p) in sources.iter().zip(&parsed) {
        match &p.skipped {
            Some(d) => {
                stats.files_skipped += 1;
                skipped.push(SkippedFile {
                    file: s.path.clone(),
                    diagnostics: d.iter().map(JsonDiagnostic::from).collect(),
                });
            }
            None => {
                stats.files_analyzed += 1;
                stats.loc += s.text.lines().count() as u64;
            }
        }
    }
    if !opts.stable_output {
        stats.parse_ms = millis(parse_time);
        stats.scan_ms = millis(scan_time);
    }
    notes.sort_by(|a, b| (&a.loc, &a.message).cmp(&(&b.loc, &b.message)));
    notes.dedup();
    sort_findings(&mut findings);
    let report = Report {
        findings,
        stats,
        skipped,
        diagnostics: notes,
        suppressed: 0,
        stale_suppressions: Vec::new(),
    };
    ScanOutcome {
        report,
        per_file,
        order: sources.into_iter().map(|s| s.rel).collect(),
    }
}

/// Scans a single in-memory file with default options.
pub fn analyze_text(name: &str, text: &str, rules: &Rulebook) -> ScanOutcome {
    scan_sources(vec![Source::new(name, text)], rules, &ScanOptions::default())
}

/// Loads rules and suppressions, discovers files, scans them and applies
/// the suppression baseline.
pub fn run_scan(config: &ScanConfig) -> Result<ScanOutcome, ScanError> {
    if config.options.cwes.is_empty() {
        return Err(ScanError::NoScanners);
    }
    let rules = Rulebook::load(config.rules.as_deref())?;
    let suppressions = config.suppressions.as_deref().map(SuppressionFile::load).transpose()?;
    let sources = discover(&config.roots)?;
    let mut outcome = scan_sources(sources, &rules, &config.options);
    if let Some(file) = suppressions {
        let applied = apply_suppressions(std::mem::take(&mut outcome.report.findings), &file);
        outcome.report.findings = applied.kept;
        outcome.report.suppressed = applied.suppressed as u64;
        outcome.report.stale_suppressions = applied.stale.iter().map(|f| f.to_string()).collect();
    }
    Ok(outcome)
}
