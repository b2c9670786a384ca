//! Acceptance criteria. Runs as a plain binary (`harness = false`) and
//! prints one PASS/FAIL line per criterion.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::panic::{self, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use rand::rngs::StdRng;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};

use rtlscan::ast::{BlockId, Item, Module, Stmt};
use rtlscan::driver::{analyze_text, discover, run_scan, scan_sources, ScanConfig, ScanOptions, Source};
use rtlscan::finding::Cwe;
use rtlscan::lexer::tokenize;
use rtlscan::loc::SourceLoc;
use rtlscan::parser::parse;
use rtlscan::preprocess::{preprocess, MacroTable};
use rtlscan::report::render_json;
use rtlscan::rules::{Category, KeywordCategory, Rulebook};
use rtlscan::scanners::cwe1245::{
    analyze_transitions, check_complete_case, CaseOutcome, FsmModel, Label, StateIssueKind, StateReset, Transition,
};
use rtlscan::scanners::cwe1271::scan_1271;
use rtlscan::scanners::cwe1280::scan_1280;
use rtlscan::scope::build_scope;

struct Verdict {
    pass: bool,
    detail: String,
}

impl Verdict {
    fn new(pass: bool, detail: impl Into<String>) -> Self {
        Verdict {
            pass,
            detail: detail.into(),
        }
    }
}

fn corpus() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/corpus")
}

fn corpus_sources() -> Vec<Source> {
    discover(&[corpus()]).expect("corpus readable")
}

fn parse_modules(name: &str, text: &str) -> Option<Vec<Module>> {
    let (toks, lex) = tokenize(text, name);
    if !lex.is_empty() {
        return None;
    }
    let pre = preprocess(toks, &mut MacroTable::default());
    let out = parse(&pre.tokens);
    (!out.skipped).then_some(out.modules)
}

// 1 ------------------------------------------------------------------------

const REFERENCE: &[(&str, Cwe, &str)] = &[
    ("locked_register.v", Cwe::C1234, "debug-overrides-lock"),
    ("jtag_lock.v", Cwe::C1271, "register-not-reset"),
    ("fsm_case.v", Cwe::C1245, "incomplete-case"),
    ("fsm_unreachable.v", Cwe::C1245, "fsm-unreachable-state"),
    ("fsm_deadlock.v", Cwe::C1245, "fsm-deadlock"),
    ("access_control.v", Cwe::C1280, "read-before-write"),
    ("sensor_regs.v", Cwe::C1262, "unprotected-register"),
];

fn reference() -> Verdict {
    let start = Instant::now();
    let rules = Rulebook::defaults();
    let mut problems = Vec::new();
    for (file, cwe, kind) in REFERENCE {
        for (dir, want) in [("weak", 1), ("clean", 0)] {
            let path = corpus().join("reference").join(dir).join(file);
            let text = std::fs::read_to_string(&path).expect("corpus file");
            let out = analyze_text(&format!("{dir}/{file}"), &text, &rules);
            let got: Vec<(Cwe, &str)> = out.findings().iter().map(|f| (f.cwe, f.kind.as_str())).collect();
            let ok = got.len() == want && (want == 0 || got[0] == (*cwe, *kind));
            if !ok {
                problems.push(format!("{dir}/{file}: {got:?}"));
            }
        }
    }
    let mut cfg = ScanConfig::new(vec![corpus().join("reference/weak")]);
    cfg.options.cwes = vec![Cwe::C1245];
    let fsm_only = run_scan(&cfg).expect("scan").findings().len();
    if fsm_only != 3 {
        problems.push(format!("--cwe 1245 gave {fsm_only} findings"));
    }
    let elapsed = start.elapsed();
    if elapsed >= Duration::from_secs(1) {
        problems.push(format!("took {elapsed:?}"));
    }
    Verdict::new(
        problems.is_empty(),
        if problems.is_empty() {
            format!("7 weak modules -> 7 expected findings, 7 clean twins -> 0, --cwe 1245 -> 3, {elapsed:.2?}")
        } else {
            problems.join("; ")
        },
    )
}

// 2 ------------------------------------------------------------------------

struct RandomFsm {
    states: usize,
    edges: Vec<(usize, usize)>,
    resets: Vec<usize>,
}

fn random_fsm(rng: &mut StdRng) -> RandomFsm {
    let states = rng.gen_range(1..=6);
    let edges = (0..rng.gen_range(0..=12))
        .map(|_| (rng.gen_range(0..states), rng.gen_range(0..states)))
        .collect();
    let resets = (0..rng.gen_range(0..=2)).map(|_| rng.gen_range(0..states)).collect();
    RandomFsm { states, edges, resets }
}

/// Degree counts over an adjacency matrix.
fn fsm_oracle(f: &RandomFsm) -> BTreeSet<(u8, usize)> {
    let mut adj = [[0u32; 6]; 6];
    for &(a, b) in &f.edges {
        adj[a][b] += 1;
    }
    let mut out = BTreeSet::new();
    for (s, row) in adj.iter().enumerate().take(f.states) {
        let indeg: u32 = adj.iter().map(|r| r[s]).sum();
        let outdeg: u32 = row.iter().sum();
        let reset = f.resets.contains(&s);
        if outdeg > 0 && indeg == 0 && !reset {
            out.insert((0, s));
        }
        if indeg > 0 && outdeg == 0 {
            out.insert((1, s));
        }
    }
    out
}

fn fsm_source(f: &RandomFsm) -> String {
    let params: Vec<String> = (0..6).map(|i| format!("S{i} = 3'd{i}")).collect();
    let mut s = format!(
        "module fsm_t(input clk, input rst0, input rst1, input [11:0] c);\n  localparam {};\n  reg [2:0] state;\n  always @(posedge clk) begin\n",
        params.join(", ")
    );
    let mut prefix = "    ";
    for (i, r) in f.resets.iter().enumerate() {
        s.push_str(&format!("{prefix}if (rst{i}) state <= S{r};\n"));
        prefix = "    else ";
    }
    s.push_str(&format!("{prefix}case (state)\n"));
    for from in 0..f.states {
        let outs: Vec<(usize, usize)> = f
            .edges
            .iter()
            .enumerate()
            .filter(|(_, e)| e.0 == from)
            .map(|(k, e)| (k, e.1))
            .collect();
        if outs.is_empty() {
            continue;
        }
        s.push_str(&format!("      S{from}: begin\n"));
        for (k, to) in outs {
            s.push_str(&format!("        if (c[{k}]) state <= S{to};\n"));
        }
        s.push_str("      end\n");
    }
    s.push_str("      default: ;\n    endcase\n  end\nendmodule\n");
    s
}

fn fsm_model(f: &RandomFsm) -> FsmModel {
    let loc = SourceLoc::new("m.v".into(), 1, 1);
    let label = |i: usize| Label::value(i as u128);
    FsmModel {
        state_var_names: vec!["state".into()],
        transitions: f
            .edges
            .iter()
            .map(|&(a, b)| Transition {
                state_var: "state".into(),
                from_state: label(a),
                to_state: label(b),
                loc: loc.clone(),
                conditions: Vec::new(),
            })
            .collect(),
        resets: f
            .resets
            .iter()
            .map(|&r| StateReset {
                state_var: "state".into(),
                value: label(r),
                loc: loc.clone(),
            })
            .collect(),
    }
}

fn fsm_equivalence() -> Verdict {
    let start = Instant::now();
    let mut rng = StdRng::seed_from_u64(0x1245);
    let rules = Rulebook::defaults();
    let mut mismatches = Vec::new();
    let mut with_issues = 0;
    for trial in 0..1000 {
        let f = random_fsm(&mut rng);
        let want = fsm_oracle(&f);
        if !want.is_empty() {
            with_issues += 1;
        }
        let direct: BTreeSet<(u8, usize)> = analyze_transitions(&fsm_model(&f))
            .into_iter()
            .map(|i| {
                let k = u8::from(i.kind == StateIssueKind::Deadlock);
                (k, i.state.text.parse::<usize>().expect("numeric label"))
            })
            .collect();
        let out = analyze_text("fsm_t.v", &fsm_source(&f), &rules);
        let scanned: BTreeSet<(u8, usize)> = out
            .findings()
            .iter()
            .filter_map(|f| {
                let k = match f.kind.as_str() {
                    "fsm-unreachable-state" => 0,
                    "fsm-deadlock" => 1,
                    _ => return None,
                };
                Some((k, f.signals[1].trim_start_matches('S').parse().expect("S<n>")))
            })
            .collect();
        if direct != want || scanned != want {
            mismatches.push(format!(
                "trial {trial}: oracle {want:?} direct {direct:?} scanned {scanned:?}"
            ));
        }
    }
    let elapsed = start.elapsed();
    let pass = mismatches.is_empty() && elapsed < Duration::from_secs(5);
    Verdict::new(
        pass,
        if mismatches.is_empty() {
            format!("1000 random FSMs ({with_issues} with issues): model-level and source-level results equal the oracle, {elapsed:.2?}")
        } else {
            format!("{} mismatches, first: {}", mismatches.len(), mismatches[0])
        },
    )
}

// 3 ------------------------------------------------------------------------

fn case_source(w: u32, items: u32, default: bool) -> String {
    let mut s = format!(
        "module cc(input clk, input rst);\n  reg [{}:0] s;\n  always @(posedge clk)\n    if (rst) s <= {w}'d0;\n    else case (s)\n",
        w - 1
    );
    for i in 0..items {
        let label = match i % 3 {
            0 => format!("{w}'d{i}"),
            1 => format!("{w}'b{i:0width$b}", width = w as usize),
            _ => format!("{w}'h{i:x}"),
        };
        s.push_str(&format!("      {label}: s <= {label};\n"));
    }
    if default {
        s.push_str(&format!("      default: s <= {w}'d0;\n"));
    }
    s.push_str("    endcase\nendmodule\n");
    s
}

fn first_case(m: &Module) -> &rtlscan::ast::CaseStatement {
    fn find(s: &Stmt) -> Option<&rtlscan::ast::CaseStatement> {
        match s {
            Stmt::Case(c) => Some(c),
            Stmt::Block(b) => b.stmts.iter().find_map(find),
            Stmt::If(i) => find(&i.then_stmt).or_else(|| i.else_stmt.as_deref().and_then(find)),
            Stmt::EventControl(e) => find(&e.body),
            _ => None,
        }
    }
    m.items
        .iter()
        .find_map(|i| match i {
            Item::Always(a) => find(&a.body),
            _ => None,
        })
        .expect("a case statement")
}

fn case_completeness() -> Verdict {
    let rules = Rulebook::defaults();
    let mut checked = 0;
    let mut problems = Vec::new();
    for w in 1..=4u32 {
        for items in 0..=(1u32 << w) {
            for default in [false, true] {
                let want_finding = !default && items < (1 << w);
                let src = case_source(w, items, default);
                let modules = parse_modules("cc.v", &src).expect("parses");
                let scope = build_scope(&modules[0]);
                let got = matches!(
                    check_complete_case(first_case(&modules[0]), &scope),
                    CaseOutcome::Incomplete(_)
                );
                checked += 1;
                if got != want_finding {
                    problems.push(format!("w={w} items={items} default={default}: check says {got}"));
                }
                // One-bit selectors are not FSM candidates, so the end-to-end
                // scan only applies from two bits up.
                if w >= 2 {
                    let out = analyze_text("cc.v", &src, &rules);
                    let got = out.findings().iter().any(|f| f.kind == "incomplete-case");
                    checked += 1;
                    if got != want_finding {
                        problems.push(format!("w={w} items={items} default={default}: scan says {got}"));
                    }
                }
            }
        }
    }
    Verdict::new(
        problems.is_empty(),
        if problems.is_empty() {
            format!("{checked} cases over widths 1-4 agree with (no default and items < 2^w)")
        } else {
            problems.join("; ")
        },
    )
}

// 4 ------------------------------------------------------------------------

type Pair = (String, BlockId, u32, u32);

/// Enumerates every (read, later write) pair per innermost block directly
/// from the tree, without the visitor.
fn rw_oracle(m: &Module) -> BTreeSet<Pair> {
    struct Acc {
        reads: Vec<(String, BlockId, u32)>,
        writes: Vec<(String, BlockId, u32)>,
    }
    fn stmt(s: &Stmt, block: Option<BlockId>, sens: &[String], acc: &mut Acc) {
        match s {
            Stmt::Block(b) => b.stmts.iter().for_each(|x| stmt(x, Some(b.id), sens, acc)),
            Stmt::If(i) => {
                stmt(&i.then_stmt, block, sens, acc);
                if let Some(e) = &i.else_stmt {
                    stmt(e, block, sens, acc);
                }
            }
            Stmt::Case(c) => c.case_items.iter().for_each(|it| stmt(&it.body, block, sens, acc)),
            Stmt::EventControl(e) => stmt(&e.body, block, sens, acc),
            Stmt::Blocking(a) => {
                let Some(b) = block else { return };
                a.lhs.for_each_id(&mut |id| {
                    if !sens.contains(&id.name) {
                        acc.writes.push((id.name.clone(), b, id.loc.line));
                    }
                });
                a.rhs.for_each_id(&mut |id| {
                    if !sens.contains(&id.name) {
                        acc.reads.push((id.name.clone(), b, id.loc.line));
                    }
                });
            }
            Stmt::NonBlocking(_) | Stmt::Null(_) => {}
        }
    }
    let mut acc = Acc {
        reads: Vec::new(),
        writes: Vec::new(),
    };
    for item in &m.items {
        if let Item::Always(a) = item {
            stmt(&a.body, None, &a.sens_list.names(), &mut acc);
        }
    }
    let mut pairs = BTreeSet::new();
    for r in &acc.reads {
        for w in &acc.writes {
            if r.0 == w.0 && r.1 == w.1 && r.2 < w.2 {
                pairs.insert((r.0.clone(), r.1, r.2, w.2));
            }
        }
    }
    pairs
}

fn rw_equivalence() -> Verdict {
    let mut files = 0;
    let mut total = 0;
    let mut problems = Vec::new();
    for s in corpus_sources() {
        let Some(modules) = parse_modules(&s.path, &s.text) else {
            continue;
        };
        files += 1;
        for m in &modules {
            let want = rw_oracle(m);
            let got: BTreeSet<Pair> = scan_1280(m)
                .into_iter()
                .map(|p| (p.read.id, p.read.block, p.read.line, p.write.line))
                .collect();
            total += want.len();
            if got != want {
                problems.push(format!("{} / {}: scanner {got:?} oracle {want:?}", s.rel, m.name));
            }
        }
    }
    Verdict::new(
        problems.is_empty(),
        if problems.is_empty() {
            format!("{files} corpus files, {total} pairs, scanner equals enumeration")
        } else {
            problems.join("; ")
        },
    )
}

// 5 ------------------------------------------------------------------------

fn keyword_modules() -> Vec<Module> {
    let dir = corpus().join("keywords");
    let sources = discover(&[dir]).expect("keyword corpus");
    sources
        .iter()
        .flat_map(|s| parse_modules(&s.path, &s.text).expect("keyword corpus parses"))
        .collect()
}

fn counts_1271(modules: &[Module], rules: &Rulebook) -> (usize, usize) {
    modules.iter().fold((0, 0), |(c, h), m| {
        let regs = scan_1271(m, rules);
        let hits = regs.iter().filter(|r| !r.initialized).count();
        (c + regs.len(), h + hits)
    })
}

fn with_register_keywords(matches: &[&str], excludes: &[&str]) -> Rulebook {
    let mut r = Rulebook::defaults();
    r.set(Category::SecurityRegister, KeywordCategory::new(matches, excludes));
    r
}

fn keyword_evolution() -> Verdict {
    let modules = keyword_modules();
    let rows = [
        with_register_keywords(&["lock", "prot"], &["clock"]),
        with_register_keywords(&["lock", "prot", "access"], &["clock"]),
        with_register_keywords(&["lock", "prot", "access"], &["clock", "block"]),
        with_register_keywords(&["lock", "prot", "access"], &["clock", "block", "ar", "aw"]),
    ];
    let counts: Vec<(usize, usize)> = rows.iter().map(|r| counts_1271(&modules, r)).collect();
    let mut problems = Vec::new();
    if modules.len() != 20 {
        problems.push(format!("expected 20 modules, found {}", modules.len()));
    }
    if !(counts[1].0 > counts[0].0 && counts[1].1 > counts[0].1) {
        problems.push("adding `access` did not increase".to_string());
    }
    for i in 2..4 {
        if !(counts[i].0 < counts[i - 1].0 && counts[i].1 < counts[i - 1].1) {
            problems.push(format!("row {} did not decrease", i + 1));
        }
    }

    let pool = [
        "lock", "prot", "access", "key", "cfg", "en", "block", "ar", "aw", "clock", "q", "mem", "region", "pad",
        "fuse", "dbg", "addr", "_",
    ];
    let mut rng = StdRng::seed_from_u64(0x1271);
    let mut violations = 0;
    for _ in 0..200 {
        let pick = |rng: &mut StdRng, n: usize| -> Vec<&str> { pool.choose_multiple(rng, n).copied().collect() };
        let n_match = rng.gen_range(1..5);
        let n_excl = rng.gen_range(0..4);
        let base_m = pick(&mut rng, n_match);
        let base_x = pick(&mut rng, n_excl);
        let extra = *pool.choose(&mut rng).expect("non-empty");
        let base = counts_1271(&modules, &with_register_keywords(&base_m, &base_x));
        let mut more_m = base_m.clone();
        more_m.push(extra);
        let widened = counts_1271(&modules, &with_register_keywords(&more_m, &base_x));
        let mut more_x = base_x.clone();
        more_x.push(extra);
        let narrowed = counts_1271(&modules, &with_register_keywords(&base_m, &more_x));
        if widened.0 < base.0 || widened.1 < base.1 || narrowed.0 > base.0 || narrowed.1 > base.1 {
            violations += 1;
        }
    }
    if violations > 0 {
        problems.push(format!("{violations} monotonicity violations"));
    }
    let hits: Vec<String> = counts.iter().map(|c| c.1.to_string()).collect();
    let cands: Vec<String> = counts.iter().map(|c| c.0.to_string()).collect();
    Verdict::new(
        problems.is_empty(),
        format!(
            "hits per row {} (candidates {}), 200 perturbations monotone{}",
            hits.join(" -> "),
            cands.join(" -> "),
            if problems.is_empty() {
                String::new()
            } else {
                format!("; {}", problems.join("; "))
            }
        ),
    )
}

// 6 ------------------------------------------------------------------------

fn node_statistics() -> Verdict {
    let out = scan_sources(corpus_sources(), &Rulebook::defaults(), &ScanOptions::default());
    let mut problems = Vec::new();
    for fs in out.per_file.iter().filter(|f| !f.skipped) {
        for (cwe, t) in &fs.tallies {
            if !(t.gated <= t.relevant && t.relevant <= fs.total_nodes) {
                problems.push(format!(
                    "{} CWE-{}: gated {} relevant {} total {}",
                    fs.file,
                    cwe.id(),
                    t.gated,
                    t.relevant,
                    fs.total_nodes
                ));
            }
        }
    }
    let s = out.report.stats.scanner(Cwe::C1234).expect("1234 enabled");
    let ratio = s.relevant_nodes as f64 / s.keyword_gated_nodes.max(1) as f64;
    if ratio < 2.0 {
        problems.push(format!("1234 reduction only {ratio:.1}x"));
    }
    let files = out.per_file.iter().filter(|f| !f.skipped).count();
    Verdict::new(
        problems.is_empty(),
        format!(
            "{files} files x 5 scanners satisfy gated <= relevant <= total; CWE-1234 {} relevant / {} gated = {ratio:.1}x{}",
            s.relevant_nodes,
            s.keyword_gated_nodes,
            if problems.is_empty() { String::new() } else { format!("; {}", problems.join("; ")) }
        ),
    )
}

// 7 ------------------------------------------------------------------------

fn generated_corpus(min_lines: usize) -> Vec<Source> {
    let seeds = corpus_sources();
    let mut out = Vec::new();
    let mut lines = 0;
    let mut copy = 0;
    while lines < min_lines {
        for s in &seeds {
            lines += s.text.lines().count();
            out.push(Source::new(format!("gen/{copy:03}/{}", s.rel), s.text.clone()));
        }
        copy += 1;
    }
    out
}

fn performance() -> Verdict {
    let sources = generated_corpus(10_000);
    let lines: usize = sources.iter().map(|s| s.text.lines().count()).sum();
    let rules = Rulebook::defaults();
    let start = Instant::now();
    let out = scan_sources(sources, &rules, &ScanOptions::default());
    let elapsed = start.elapsed();
    let st = &out.report.stats;
    Verdict::new(
        elapsed < Duration::from_secs(1),
        format!(
            "{lines} lines, {} files, {} findings in {elapsed:.2?} (parse {:.1} ms, scan {:.1} ms){}",
            st.files_analyzed + st.files_skipped,
            out.findings().len(),
            st.parse_ms,
            st.scan_ms,
            if cfg!(debug_assertions) { ", debug build" } else { "" }
        ),
    )
}

// 8 ------------------------------------------------------------------------

fn determinism() -> Verdict {
    let mut cfg = ScanConfig::new(vec![corpus()]);
    cfg.options.stable_output = true;
    let a = render_json(&run_scan(&cfg).expect("scan").report);
    let b = render_json(&run_scan(&cfg).expect("scan").report);
    let mut problems = Vec::new();
    if a != b {
        problems.push("two runs differ".to_string());
    }
    let opts = ScanOptions {
        stable_output: true,
        ..ScanOptions::default()
    };
    let rules = Rulebook::defaults();
    let base = render_json(&scan_sources(corpus_sources(), &rules, &opts).report);
    let mut rng = StdRng::seed_from_u64(8);
    for i in 0..10 {
        let mut s = corpus_sources();
        s.shuffle(&mut rng);
        if render_json(&scan_sources(s, &rules, &opts).report) != base {
            problems.push(format!("shuffle {i} differs"));
        }
    }
    Verdict::new(
        problems.is_empty(),
        if problems.is_empty() {
            format!(
                "two --stable-output runs byte-identical ({} bytes); 10 shuffled orders identical",
                a.len()
            )
        } else {
            problems.join("; ")
        },
    )
}

// 9 ------------------------------------------------------------------------

const FUZZ_TOKENS: &[&str] = &[
    "begin",
    "end",
    "(",
    ")",
    "[",
    "]",
    "{",
    "}",
    ";",
    "case",
    "endcase",
    "if",
    "else",
    "module",
    "endmodule",
    "`define X",
    "`X",
    "`ifdef X",
    "`endif",
    "`include \"x.vh\"",
    "<=",
    "=",
    "?",
    ":",
    "'",
    "4'b1x0z",
    "/*",
    "*/",
    "//",
    "\"",
    "#",
    "@",
    "always",
    "\n",
    "\\esc ",
];

fn mutate(rng: &mut StdRng, src: &[u8]) -> Vec<u8> {
    let mut b = src.to_vec();
    for _ in 0..rng.gen_range(1..=8) {
        let len = b.len();
        match rng.gen_range(0..6) {
            0 if len > 0 => {
                let i = rng.gen_range(0..len);
                b[i] ^= 1 << rng.gen_range(0..8);
            }
            1 => {
                let i = rng.gen_range(0..=len);
                b.insert(i, rng.gen());
            }
            2 if len > 0 => {
                let i = rng.gen_range(0..len);
                let j = (i + rng.gen_range(1..32)).min(len);
                b.drain(i..j);
            }
            3 if len > 0 => {
                let i = rng.gen_range(0..len);
                let j = (i + rng.gen_range(1..64)).min(len);
                let chunk = b[i..j].to_vec();
                let at = rng.gen_range(0..=b.len());
                b.splice(at..at, chunk);
            }
            4 => {
                let t = FUZZ_TOKENS.choose(rng).expect("non-empty");
                let at = rng.gen_range(0..=len);
                b.splice(at..at, format!(" {t} ").into_bytes());
            }
            _ if len > 0 => {
                let i = rng.gen_range(0..len);
                b[i] = rng.gen();
            }
            _ => {}
        }
    }
    b
}

fn robustness() -> Verdict {
    let seeds: Vec<Source> = corpus_sources();
    let rules = Rulebook::defaults();
    let mut rng = StdRng::seed_from_u64(0xf022);
    let prev_hook = panic::take_hook();
    panic::set_hook(Box::new(|_| {}));
    let mut crashes = Vec::new();
    let mut violations = Vec::new();
    let (mut analyzed, mut skipped, mut empty) = (0, 0, 0);
    for i in 0..10_000 {
        let seed = seeds.choose(&mut rng).expect("corpus");
        let bytes = mutate(&mut rng, seed.text.as_bytes());
        let text = String::from_utf8_lossy(&bytes).into_owned();
        let result = panic::catch_unwind(AssertUnwindSafe(|| {
            let out = analyze_text("fuzz.v", &text, &rules);
            let (toks, _) = tokenize(&text, "fuzz.v");
            let pre = preprocess(toks, &mut MacroTable::default());
            let parsed = parse(&pre.tokens);
            (out, parsed, pre.tokens.is_empty())
        }));
        match result {
            Err(_) => crashes.push(i),
            Ok((out, parsed, no_tokens)) => {
                if out.report.stats.files_skipped == 1 {
                    skipped += 1;
                    if out.report.skipped.iter().any(|s| s.diagnostics.is_empty()) {
                        violations.push(format!("input {i}: skipped without diagnostics"));
                    }
                } else {
                    analyzed += 1;
                    if parsed.modules.is_empty() {
                        if no_tokens {
                            empty += 1;
                        } else {
                            violations.push(format!("input {i}: neither modules nor diagnostics"));
                        }
                    }
                }
                if parsed.skipped && (parsed.diagnostics.is_empty() || !parsed.modules.is_empty()) {
                    violations.push(format!("input {i}: inconsistent parse outcome"));
                }
            }
        }
    }
    panic::set_hook(prev_hook);
    let pass = crashes.is_empty() && violations.is_empty();
    Verdict::new(
        pass,
        format!(
            "10000 mutated inputs: {analyzed} analyzed ({empty} empty after preprocessing), {skipped} skipped with diagnostics, {} crashes{}",
            crashes.len(),
            if violations.is_empty() {
                String::new()
            } else {
                format!("; {} violations, first: {}", violations.len(), violations[0])
            }
        ),
    )
}

// -------------------------------------------------------------------------

type Criterion = (&'static str, fn() -> Verdict);

fn main() {
    let criteria: [Criterion; 9] = [
        ("reference-corpus", reference),
        ("fsm-oracle-equivalence", fsm_equivalence),
        ("case-completeness", case_completeness),
        ("read-before-write-oracle", rw_equivalence),
        ("keyword-evolution", keyword_evolution),
        ("node-statistics", node_statistics),
        ("performance-10kloc", performance),
        ("determinism", determinism),
        ("parser-robustness", robustness),
    ];
    let mut failed = HashSet::new();
    for (i, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let verdict = panic::catch_unwind(run).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Verdict::new(false, format!("panicked: {msg}"))
        });
        let status = if verdict.pass { "PASS" } else { "FAIL" };
        if !verdict.pass {
            failed.insert(i);
        }
        println!(
            "{status} [{}] {name}: {} ({:.2?})",
            i + 1,
            verdict.detail,
            start.elapsed()
        );
    }
    let summary: BTreeMap<&str, usize> = [("passed", criteria.len() - failed.len()), ("failed", failed.len())].into();
    println!("acceptance: {} passed, {} failed", summary["passed"], summary["failed"]);
    if !failed.is_empty() {
        std::process::exit(1);
    }
}
