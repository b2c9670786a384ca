use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn corpus(sub: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../core/tests/corpus")
        .join(sub)
}

fn rtlscan(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rtlscan"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).expect("utf-8 output")
}

fn json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).expect("valid json")
}

fn weak() -> String {
    corpus("reference/weak").display().to_string()
}

#[test]
fn clean_corpus_exits_zero_even_with_fail_flag() {
    let out = rtlscan(&[
        "scan",
        &corpus("reference/clean").display().to_string(),
        "--fail-on-findings",
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).contains("findings: 0"));
}

#[test]
fn findings_only_fail_when_asked() {
    assert_eq!(rtlscan(&["scan", &weak()]).status.code(), Some(0));
    assert_eq!(rtlscan(&["scan", &weak(), "--fail-on-findings"]).status.code(), Some(1));
}

#[test]
fn cwe_filter_keeps_fsm_findings_only() {
    let out = rtlscan(&["scan", &weak(), "--cwe", "1245", "--format", "json"]);
    let report = json(&out);
    let findings = report["findings"].as_array().unwrap();
    assert_eq!(findings.len(), 3);
    assert!(findings.iter().all(|f| f["cwe"] == 1245));
    let mut kinds: Vec<&str> = findings.iter().map(|f| f["kind"].as_str().unwrap()).collect();
    kinds.sort();
    assert_eq!(kinds, ["fsm-deadlock", "fsm-unreachable-state", "incomplete-case"]);
}

#[test]
fn json_report_shape() {
    let report = json(&rtlscan(&["scan", &weak(), "--format", "json", "--stable-output"]));
    assert_eq!(report["findings"].as_array().unwrap().len(), 7);
    assert_eq!(report["stats"]["files_analyzed"], 7);
    assert_eq!(report["stats"]["parse_ms"], 0.0);
    for f in report["findings"].as_array().unwrap() {
        let fp = f["fingerprint"].as_str().unwrap();
        assert_eq!(fp.len(), 16);
        assert!(fp.chars().all(|c| c.is_ascii_hexdigit()));
    }
}

#[test]
fn baseline_suppresses_everything_then_goes_stale() {
    let dir = tempfile::tempdir().unwrap();
    let base = dir.path().join("baseline.txt");
    let base_s = base.display().to_string();
    let first = rtlscan(&["scan", &weak(), "--write-baseline", &base_s]);
    assert_eq!(first.status.code(), Some(0));

    let again = rtlscan(&[
        "scan",
        &weak(),
        "--suppressions",
        &base_s,
        "--fail-on-findings",
        "--format",
        "json",
    ]);
    assert_eq!(again.status.code(), Some(0));
    let report = json(&again);
    assert_eq!(report["findings"].as_array().unwrap().len(), 0);
    assert_eq!(report["suppressed"], 7);

    let clean = rtlscan(&[
        "scan",
        &corpus("reference/clean").display().to_string(),
        "--suppressions",
        &base_s,
        "--format",
        "json",
    ]);
    assert_eq!(json(&clean)["stale_suppressions"].as_array().unwrap().len(), 7);
}

#[test]
fn bad_inputs_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let rules = dir.path().join("rules.json");
    std::fs::write(&rules, "{ \"lock\": [\"lock\"] ").unwrap();
    let out = rtlscan(&["scan", &weak(), "--rules", &rules.display().to_string()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("rules.json"));

    let sup = dir.path().join("s.txt");
    std::fs::write(&sup, "not-a-fingerprint\n").unwrap();
    let out = rtlscan(&["scan", &weak(), "--suppressions", &sup.display().to_string()]);
    assert_eq!(out.status.code(), Some(2));

    assert_eq!(rtlscan(&["scan", &weak(), "--cwe", "9999"]).status.code(), Some(2));
    assert_eq!(rtlscan(&["scan", &weak(), "--severity", "1280"]).status.code(), Some(2));
}

#[test]
fn severity_override_shows_in_output() {
    let out = rtlscan(&[
        "scan",
        &weak(),
        "--cwe",
        "1280",
        "--severity",
        "1280=warning",
        "--format",
        "json",
    ]);
    let report = json(&out);
    assert!(report["findings"]
        .as_array()
        .unwrap()
        .iter()
        .all(|f| f["severity"] == "warning"));
}

#[test]
fn custom_rules_change_results() {
    let dir = tempfile::tempdir().unwrap();
    let rules = dir.path().join("rules.json");
    std::fs::write(
        &rules,
        r#"{ "security_register": { "match": ["nothing_matches_this"] } }"#,
    )
    .unwrap();
    let out = rtlscan(&[
        "scan",
        &weak(),
        "--cwe",
        "1271",
        "--rules",
        &rules.display().to_string(),
        "--format",
        "json",
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(json(&out)["findings"].as_array().unwrap().len(), 0);
}

#[test]
fn rules_subcommand_round_trips() {
    let out = rtlscan(&["rules"]);
    assert_eq!(out.status.code(), Some(0));
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("rules.json");
    std::fs::write(&path, &out.stdout).unwrap();
    let again = rtlscan(&["rules", "--rules", &path.display().to_string()]);
    assert_eq!(again.stdout, out.stdout);
}

#[test]
fn stats_flag_adds_scanner_lines() {
    let text = stdout(&rtlscan(&["scan", &weak(), "--stats"]));
    for cwe in ["1234", "1271", "1245", "1280", "1262"] {
        assert!(text.contains(&format!("CWE-{cwe}: relevant")), "{text}");
    }
}
