//! The five weakness scanners. Each one walks a single module.

pub mod cwe1234;
pub mod cwe1245;
pub mod cwe1262;
pub mod cwe1271;
pub mod cwe1280;

use crate::ast::Module;
use crate::finding::{Cwe, Finding};
use crate::loc::Diagnostic;
use crate::rules::Rulebook;
use crate::scope::Scope;

#[derive(Debug, Clone, Copy)]
pub struct ModuleContext<'a> {
    pub module: &'a Module,
    pub scope: &'a Scope,
    pub rules: &'a Rulebook,
}

/// Nodes a scanner traversed because its handlers name their kind, and the
/// subset it traversed because a keyword matched.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct NodeTally {
    pub relevant: u64,
    pub gated: u64,
}

impl std::ops::AddAssign for NodeTally {
    fn add_assign(&mut self, rhs: Self) {
        self.relevant += rhs.relevant;
        self.gated += rhs.gated;
    }
}

#[derive(Debug, Clone, Default)]
pub struct ScannerOutput {
    pub findings: Vec<Finding>,
    pub diagnostics: Vec<Diagnostic>,
    pub tally: NodeTally,
}

pub fn run_scanner(cwe: Cwe, ctx: &ModuleContext<'_>) -> ScannerOutput {
    match cwe {
        Cwe::C1234 => cwe1234::scan(ctx),
        Cwe::C1271 => cwe1271::scan(ctx),
        Cwe::C1245 => cwe1245::scan(ctx),
        Cwe::C1280 => cwe1280::scan(ctx),
        Cwe::C1262 => cwe1262::scan(ctx),
    }
}
