//! Reads that precede a write of the same identifier inside one begin/end
//! block, through blocking assignments only.

use std::collections::BTreeSet;

use crate::ast::*;
use crate::finding::{Cwe, Finding};
use crate::loc::SourceLoc;
use crate::visit::{accept_expr, accept_module, walk_always, walk_assignment, walk_seq_block, AssignKind, Visitor};

use super::{ModuleContext, NodeTally, ScannerOutput};

pub const KIND: &str = "read-before-write";

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct AccessRecord {
    pub id: String,
    pub block: BlockId,
    pub line: u32,
    pub loc: SourceLoc,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AccessPair {
    pub read: AccessRecord,
    pub write: AccessRecord,
}

#[derive(Debug, Default)]
pub struct RwWalkState {
    pub sens_list: Vec<String>,
    pub last_block: Option<BlockId>,
    pub is_b_assign: bool,
    pub is_lhs: bool,
    pub reads: Vec<AccessRecord>,
    pub writes: Vec<AccessRecord>,
}

struct Scan {
    state: RwWalkState,
    tally: NodeTally,
}

impl Visitor for Scan {
    fn on_node(&mut self, kind: NodeKind) {
        if matches!(
            kind,
            NodeKind::AlwaysConstruct | NodeKind::SeqBlock | NodeKind::BlockingAssign | NodeKind::IdRef
        ) {
            self.tally.relevant += 1;
        }
    }

    fn visit_always(&mut self, node: &AlwaysConstruct) {
        self.state.sens_list = node.sens_list.names();
        walk_always(self, node);
        self.state.sens_list.clear();
    }

    fn visit_seq_block(&mut self, node: &SeqBlock) {
        let last = self.state.last_block.replace(node.id);
        walk_seq_block(self, node);
        self.state.last_block = last;
    }

    fn visit_assignment(&mut self, node: &Assignment, kind: AssignKind) {
        if kind == AssignKind::NonBlocking {
            walk_assignment(self, node);
            return;
        }
        self.state.is_b_assign = true;
        self.state.is_lhs = true;
        accept_expr(self, &node.lhs);
        self.state.is_lhs = false;
        accept_expr(self, &node.rhs);
        self.state.is_b_assign = false;
    }

    fn visit_id_ref(&mut self, node: &IdRef) {
        let s = &mut self.state;
        if !s.is_b_assign || s.sens_list.contains(&node.name) {
            return;
        }
        // Records need an enclosing begin/end to pair within.
        let Some(block) = s.last_block else {
            return;
        };
        let rec = AccessRecord {
            id: node.name.clone(),
            block,
            line: node.loc.line,
            loc: node.loc.clone(),
        };
        if s.is_lhs {
            s.writes.push(rec);
        } else {
            s.reads.push(rec);
        }
    }
}

/// Pairs every read with every later write of the same id in the same
/// block, once per (id, block, read line, write line).
pub fn detect(reads: &[AccessRecord], writes: &[AccessRecord]) -> Vec<AccessPair> {
    let mut seen = BTreeSet::new();
    let mut pairs = Vec::new();
    for w in writes {
        for r in reads {
            if r.id == w.id && r.block == w.block && r.line < w.line {
                let key = (r.id.clone(), r.block, r.line, w.line);
                if seen.insert(key) {
                    pairs.push(AccessPair {
                        read: r.clone(),
                        write: w.clone(),
                    });
                }
            }
        }
    }
    pairs.sort_by(|a, b| {
        (&a.read.id, a.read.block, a.read.line, a.write.line).cmp(&(
            &b.read.id,
            b.read.block,
            b.read.line,
            b.write.line,
        ))
    });
    pairs
}

pub fn scan_1280(module: &Module) -> Vec<AccessPair> {
    run(module).0
}

fn run(module: &Module) -> (Vec<AccessPair>, NodeTally) {
    let mut v = Scan {
        state: RwWalkState::default(),
        tally: NodeTally::default(),
    };
    accept_module(&mut v, module);
    let mut tally = v.tally;
    tally.gated = tally.relevant;
    (detect(&v.state.reads, &v.state.writes), tally)
}

pub fn scan(ctx: &ModuleContext<'_>) -> ScannerOutput {
    let (pairs, tally) = run(ctx.module);
    let findings = pairs
        .into_iter()
        .map(|p| {
            let message = format!(
                "`{}` is read at line {} before it is written at line {} in the same block",
                p.read.id, p.read.line, p.write.line
            );
            Finding::new(Cwe::C1280, KIND, &ctx.module.name, p.read.loc, vec![p.read.id], message)
                .with_secondary(p.write.loc)
        })
        .collect();
    ScannerOutput {
        findings,
        diagnostics: Vec::new(),
        tally,
    }
}
