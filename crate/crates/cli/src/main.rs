use std::collections::BTreeMap;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{anyhow, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};

use rtlscan::driver::{run_scan, OutputFormat, ScanConfig, ScanOptions};
use rtlscan::finding::{Cwe, Severity};
use rtlscan::report::{render_json, render_text, TextOptions};
use rtlscan::rules::Rulebook;
use rtlscan::suppress::SuppressionFile;

#[derive(Parser)]
#[command(
    name = "rtlscan",
    version,
    about = "Scan Verilog RTL for hardware security weaknesses"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Scan files or directories of *.v / *.sv sources.
    Scan(ScanArgs),
    /// Print the effective keyword rulebook as JSON.
    Rules {
        /// Rulebook file to load instead of the built-in defaults.
        #[arg(long, value_name = "FILE")]
        rules: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Text,
    Json,
}

#[derive(clap::Args)]
struct ScanArgs {
    #[arg(required = true, value_name = "PATH")]
    paths: Vec<PathBuf>,
    /// Comma-separated CWE numbers to run (default: all five).
    #[arg(long, value_name = "LIST", value_delimiter = ',')]
    cwe: Vec<String>,
    /// Keyword rulebook (JSON).
    #[arg(long, value_name = "FILE")]
    rules: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "text")]
    format: Format,
    /// Baseline of fingerprints to suppress.
    #[arg(long, value_name = "FILE")]
    suppressions: Option<PathBuf>,
    /// Include per-scanner node statistics in the text report.
    #[arg(long)]
    stats: bool,
    /// Exit with status 1 when findings remain after suppression.
    #[arg(long)]
    fail_on_findings: bool,
    /// Zero timing fields so repeated runs produce identical output.
    #[arg(long)]
    stable_output: bool,
    /// Override a scanner's severity, e.g. `1280=warning`. Repeatable.
    #[arg(long, value_name = "CWE=LEVEL")]
    severity: Vec<String>,
    /// Write a suppression baseline covering the reported findings.
    #[arg(long, value_name = "FILE")]
    write_baseline: Option<PathBuf>,
}

fn parse_cwes(list: &[String]) -> Result<Vec<Cwe>> {
    if list.is_empty() {
        return Ok(Cwe::ALL.to_vec());
    }
    let mut out = Vec::new();
    for item in list.iter().map(|s| s.trim()).filter(|s| !s.is_empty()) {
        let cwe: Cwe = item
            .parse()
            .map_err(|_| anyhow!("unknown CWE `{item}` (expected one of 1234, 1271, 1245, 1280, 1262)"))?;
        if !out.contains(&cwe) {
            out.push(cwe);
        }
    }
    Ok(out)
}

fn parse_severities(list: &[String]) -> Result<BTreeMap<Cwe, Severity>> {
    let mut out = BTreeMap::new();
    for item in list {
        let (c, s) = item
            .split_once('=')
            .ok_or_else(|| anyhow!("--severity expects CWE=LEVEL, got `{item}`"))?;
        let cwe: Cwe = c.trim().parse().map_err(|_| anyhow!("unknown CWE `{c}`"))?;
        let sev: Severity = s.trim().parse().map_err(|e: String| anyhow!(e))?;
        out.insert(cwe, sev);
    }
    Ok(out)
}

fn scan(args: ScanArgs) -> Result<u8> {
    let config = ScanConfig {
        roots: args.paths,
        options: ScanOptions {
            cwes: parse_cwes(&args.cwe)?,
            severity: parse_severities(&args.severity)?,
            stable_output: args.stable_output,
        },
        rules: args.rules,
        format: match args.format {
            Format::Text => OutputFormat::Text,
            Format::Json => OutputFormat::Json,
        },
        stats: args.stats,
        suppressions: args.suppressions,
        fail_on_findings: args.fail_on_findings,
    };
    let outcome = run_scan(&config)?;
    let rendered = match config.format {
        OutputFormat::Text => render_text(&outcome.report, TextOptions { stats: config.stats }),
        OutputFormat::Json => render_json(&outcome.report),
    };
    emit(&rendered)?;
    if let Some(path) = &args.write_baseline {
        std::fs::write(path, SuppressionFile::baseline(&outcome.report.findings))
            .with_context(|| format!("cannot write {}", path.display()))?;
    }
    Ok(outcome.exit_code(config.fail_on_findings) as u8)
}

/// Writes to stdout; a closed pipe (`| head`) is not an error.
fn emit(text: &str) -> Result<()> {
    let mut stdout = std::io::stdout().lock();
    match stdout.write_all(text.as_bytes()).and_then(|()| stdout.flush()) {
        Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(e.into()),
        _ => Ok(()),
    }
}

fn run(cli: Cli) -> Result<u8> {
    match cli.command {
        Command::Scan(args) => scan(args),
        Command::Rules { rules } => {
            let book = Rulebook::load(rules.as_deref())?;
            emit(&format!("{}\n", book.to_json()))?;
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("rtlscan: {e:#}");
            ExitCode::from(2)
        }
    }
}
