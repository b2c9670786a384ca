//! Security-relevant registers never assigned under a reset condition.

use crate::ast::*;
use crate::finding::{Cwe, Finding};
use crate::loc::SourceLoc;
use crate::rules::{Category, Rulebook};
use crate::visit::{accept_expr, accept_module, accept_stmt, AssignKind, Visitor};

use super::{ModuleContext, NodeTally, ScannerOutput};

pub const KIND: &str = "register-not-reset";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SensitiveRegister {
    pub name: String,
    pub keyword: String,
    pub decl_loc: SourceLoc,
    pub initialized: bool,
    pub init_loc: Option<SourceLoc>,
}

#[derive(Debug, Clone, Default)]
pub struct ResetWalkState {
    pub is_reset_block: bool,
    pub is_reset_lhs: bool,
    pub loc_init_sr: Option<SourceLoc>,
}

struct Scan<'a> {
    rules: &'a Rulebook,
    regs: Vec<SensitiveRegister>,
    state: ResetWalkState,
    tally: NodeTally,
}

impl Visitor for Scan<'_> {
    fn on_node(&mut self, kind: NodeKind) {
        if matches!(
            kind,
            NodeKind::DataDecl
                | NodeKind::ConditionalStatement
                | NodeKind::BlockingAssign
                | NodeKind::NonBlockingAssign
                | NodeKind::IdRef
        ) {
            self.tally.relevant += 1;
        }
    }

    fn visit_data_decl(&mut self, node: &DataDecl) {
        if !node.is_register_decl() {
            return;
        }
        let mut found = false;
        for id in &node.ids {
            let Some(kw) = self.rules.matched_keyword(&id.name, Category::SecurityRegister) else {
                continue;
            };
            found = true;
            if self.regs.iter().any(|r| r.name == id.name) {
                continue;
            }
            let init_loc = id.init.as_ref().map(|_| id.loc.clone());
            self.regs.push(SensitiveRegister {
                name: id.name.clone(),
                keyword: kw.to_string(),
                decl_loc: id.loc.clone(),
                initialized: init_loc.is_some(),
                init_loc,
            });
        }
        if found {
            self.tally.gated += 1;
        }
    }

    fn visit_conditional(&mut self, node: &ConditionalStatement) {
        let mut is_reset = false;
        node.if_expr.for_each_id(&mut |id| {
            is_reset |= self.rules.matches(&id.name, Category::Reset);
        });
        if is_reset {
            self.tally.gated += 1;
        }
        // Nested conditionals inside a reset branch stay inside it.
        let outer = self.state.is_reset_block;
        self.state.is_reset_block = outer || is_reset;
        accept_stmt(self, &node.then_stmt);
        self.state.is_reset_block = outer;
        if let Some(e) = &node.else_stmt {
            accept_stmt(self, e);
        }
    }

    fn visit_assignment(&mut self, node: &Assignment, _kind: AssignKind) {
        if !self.state.is_reset_block {
            return;
        }
        self.tally.gated += 1;
        self.state.loc_init_sr = Some(node.lhs.loc().clone());
        self.state.is_reset_lhs = true;
        accept_expr(self, &node.lhs);
        self.state.is_reset_lhs = false;
    }

    fn visit_id_ref(&mut self, node: &IdRef) {
        if !self.state.is_reset_lhs {
            return;
        }
        self.tally.gated += 1;
        for r in self.regs.iter_mut().filter(|r| r.name == node.name) {
            r.initialized = true;
            r.init_loc = self.state.loc_init_sr.clone();
        }
    }
}

/// Every security-relevant register candidate, with whether a reset branch
/// initializes it.
pub fn scan_1271(module: &Module, rules: &Rulebook) -> Vec<SensitiveRegister> {
    run(module, rules).0
}

fn run(module: &Module, rules: &Rulebook) -> (Vec<SensitiveRegister>, NodeTally) {
    let mut v = Scan {
        rules,
        regs: Vec::new(),
        state: ResetWalkState::default(),
        tally: NodeTally::default(),
    };
    accept_module(&mut v, module);
    debug_assert!(!v.state.is_reset_block && !v.state.is_reset_lhs);
    (v.regs, v.tally)
}

pub fn scan(ctx: &ModuleContext<'_>) -> ScannerOutput {
    let (regs, tally) = run(ctx.module, ctx.rules);
    let findings = regs
        .into_iter()
        .filter(|r| !r.initialized)
        .map(|r| {
            let message = format!(
                "security-relevant register `{}` is never assigned in a reset branch",
                r.name
            );
            Finding::new(Cwe::C1271, KIND, &ctx.module.name, r.decl_loc, vec![r.name], message)
                .with_keywords(vec![r.keyword])
        })
        .collect();
    ScannerOutput {
        findings,
        diagnostics: Vec::new(),
        tally,
    }
}
