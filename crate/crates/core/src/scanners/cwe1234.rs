//! Debug signals that can override a lock: an `if` condition naming both a
//! lock-like and a debug-like signal joined somewhere by `||` or `|`.

use crate::ast::*;
use crate::finding::{Cwe, Finding};
use crate::loc::SourceLoc;
use crate::rules::{Category, Rulebook};
use crate::visit::{accept_module, accept_stmt, count_expr_nodes, Visitor};

use super::{ModuleContext, NodeTally, ScannerOutput};

pub const KIND: &str = "debug-overrides-lock";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OverrideHit {
    pub loc: SourceLoc,
    pub condition: String,
    pub lock_names: Vec<String>,
    pub debug_names: Vec<String>,
    pub keywords: Vec<String>,
    pub operator_found: &'static str,
}

struct Scan<'a> {
    rules: &'a Rulebook,
    hits: Vec<OverrideHit>,
    tally: NodeTally,
}

impl Visitor for Scan<'_> {
    fn on_node(&mut self, kind: NodeKind) {
        if kind == NodeKind::ConditionalStatement {
            self.tally.relevant += 1;
        }
    }

    fn visit_conditional(&mut self, node: &ConditionalStatement) {
        let expr_nodes = count_expr_nodes(&node.if_expr);
        self.tally.relevant += expr_nodes;
        if let Some(hit) = check_condition(&node.if_expr, self.rules, &mut self.tally, expr_nodes) {
            self.hits.push(hit);
        }
        if let Some(e) = &node.else_stmt {
            accept_stmt(self, e);
        }
        accept_stmt(self, &node.then_stmt);
    }
}

fn check_condition(expr: &Expr, rules: &Rulebook, tally: &mut NodeTally, expr_nodes: u64) -> Option<OverrideHit> {
    let mut lock_names = Vec::new();
    let mut debug_names = Vec::new();
    let mut keywords = Vec::new();
    expr.for_each_id(&mut |id| {
        if let Some(k) = rules.matched_keyword(&id.name, Category::Lock) {
            push_unique(&mut lock_names, &id.name);
            push_unique(&mut keywords, k);
        }
        if let Some(k) = rules.matched_keyword(&id.name, Category::Debug) {
            push_unique(&mut debug_names, &id.name);
            push_unique(&mut keywords, k);
        }
    });
    if lock_names.is_empty() || debug_names.is_empty() {
        return None;
    }
    tally.gated += 1 + expr_nodes;
    let operator_found = find_or(expr)?;
    Some(OverrideHit {
        loc: expr.loc().clone(),
        condition: expr.to_string(),
        lock_names,
        debug_names,
        keywords,
        operator_found,
    })
}

fn push_unique(v: &mut Vec<String>, s: &str) {
    if !v.iter().any(|x| x == s) {
        v.push(s.to_string());
    }
}

/// `||` if present anywhere, else `|` if present. Reduction `|x` does not count.
fn find_or(expr: &Expr) -> Option<&'static str> {
    fn walk(e: &Expr, logical: &mut bool, bitwise: &mut bool) {
        match e {
            Expr::Binary(b) => {
                match b.op {
                    BinaryOp::LogOr => *logical = true,
                    BinaryOp::BitOr => *bitwise = true,
                    _ => {}
                }
                walk(&b.lhs, logical, bitwise);
                walk(&b.rhs, logical, bitwise);
            }
            Expr::Unary(u) => walk(&u.operand, logical, bitwise),
            Expr::Ternary(t) => {
                walk(&t.cond, logical, bitwise);
                walk(&t.then_e, logical, bitwise);
                walk(&t.else_e, logical, bitwise);
            }
            Expr::Concat(c) => c.parts.iter().for_each(|p| walk(p, logical, bitwise)),
            Expr::Replicate(r) => {
                walk(&r.count, logical, bitwise);
                r.parts.iter().for_each(|p| walk(p, logical, bitwise));
            }
            Expr::Call(c) => c.args.iter().for_each(|a| walk(a, logical, bitwise)),
            Expr::Id(_) | Expr::Indexed(_) | Expr::Const(_) | Expr::Str(_) => {}
        }
    }
    let (mut logical, mut bitwise) = (false, false);
    walk(expr, &mut logical, &mut bitwise);
    if logical {
        Some("||")
    } else if bitwise {
        Some("|")
    } else {
        None
    }
}

/// Every conditional in `module` whose condition lets a debug signal
/// override a lock signal.
pub fn scan_1234(module: &Module, rules: &Rulebook) -> Vec<OverrideHit> {
    run(module, rules).0
}

fn run(module: &Module, rules: &Rulebook) -> (Vec<OverrideHit>, NodeTally) {
    let mut v = Scan {
        rules,
        hits: Vec::new(),
        tally: NodeTally::default(),
    };
    accept_module(&mut v, module);
    (v.hits, v.tally)
}

pub fn scan(ctx: &ModuleContext<'_>) -> ScannerOutput {
    let (hits, tally) = run(ctx.module, ctx.rules);
    let findings = hits
        .into_iter()
        .map(|h| {
            let message = format!(
                "debug signal {} can override lock {} through `{}` in `{}`",
                quote_list(&h.debug_names),
                quote_list(&h.lock_names),
                h.operator_found,
                h.condition
            );
            let signals = h.lock_names.iter().chain(&h.debug_names).cloned().collect();
            Finding::new(Cwe::C1234, KIND, &ctx.module.name, h.loc, signals, message).with_keywords(h.keywords)
        })
        .collect();
    ScannerOutput {
        findings,
        diagnostics: Vec::new(),
        tally,
    }
}

pub(crate) fn quote_list(names: &[String]) -> String {
    names.iter().map(|n| format!("`{n}`")).collect::<Vec<_>>().join(", ")
}
