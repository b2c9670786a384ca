//! Explicit finite-state machines: variable discovery, transition
//! extraction, and the unreachable / deadlock / incomplete-case checks.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt;

use crate::ast::*;
use crate::finding::{Cwe, Finding};
use crate::loc::{Diagnostic, SourceLoc};
use crate::scope::Scope;
use crate::visit::{accept_module, accept_stmt, walk_conditional, AssignKind, Visitor};

use super::{ModuleContext, NodeTally, ScannerOutput};

pub const KIND_UNREACHABLE: &str = "fsm-unreachable-state";
pub const KIND_DEADLOCK: &str = "fsm-deadlock";
pub const KIND_INCOMPLETE_CASE: &str = "incomplete-case";

/// Identity of a state label: its normalized value when known, else its name.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum LabelKey {
    Value(u128),
    Name(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Label {
    pub key: LabelKey,
    /// Macro or parameter name when there is one, else the decimal value.
    pub text: String,
    /// A literal with x/z digits; never a usable state.
    pub has_xz: bool,
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.text)
    }
}

impl Label {
    pub fn value(v: u128) -> Label {
        Label {
            key: LabelKey::Value(v),
            text: v.to_string(),
            has_xz: false,
        }
    }

    pub fn named(name: &str) -> Label {
        Label {
            key: LabelKey::Name(name.to_string()),
            text: name.to_string(),
            has_xz: false,
        }
    }
}

/// Classifies `expr` as a state label: a constant (possibly from a macro), an
/// undefined macro, or a parameter.
pub fn label_of(expr: &Expr, scope: &Scope) -> Option<Label> {
    match expr {
        Expr::Const(c) => {
            if c.value.has_xz || c.value.value.is_none() {
                return Some(Label {
                    key: LabelKey::Name(c.value.raw.clone()),
                    text: c.value.raw.clone(),
                    has_xz: true,
                });
            }
            let v = c.value.value?;
            Some(Label {
                key: LabelKey::Value(v),
                text: c.macro_name.clone().unwrap_or_else(|| v.to_string()),
                has_xz: false,
            })
        }
        Expr::Id(id) if id.from_macro => Some(Label::named(&id.name)),
        Expr::Id(id) => {
            let p = scope.param(&id.name)?;
            let value = p.value.and_then(|v| u128::try_from(v).ok());
            Some(Label {
                key: value.map_or_else(|| LabelKey::Name(id.name.clone()), LabelKey::Value),
                text: id.name.clone(),
                has_xz: false,
            })
        }
        _ => None,
    }
}

// ---------------------------------------------------------------------------
// Variable discovery

#[derive(Debug, Clone, PartialEq, Eq)]
enum Rhs {
    Label,
    /// An x/z literal: skipped later, but does not disqualify the target.
    XzLabel,
    Var(String),
    Other,
}

#[derive(Default)]
struct Facts {
    assigns: HashMap<String, Vec<Rhs>>,
    compared: HashSet<String>,
}

struct FactCollector<'a> {
    scope: &'a Scope,
    facts: Facts,
}

impl FactCollector<'_> {
    fn note_compare(&mut self, e: &Expr) {
        e.for_each_binary(&mut |b| {
            if !matches!(b.op, BinaryOp::Eq | BinaryOp::Ne | BinaryOp::CaseEq | BinaryOp::CaseNe) {
                return;
            }
            for (var, other) in [(&*b.lhs, &*b.rhs), (&*b.rhs, &*b.lhs)] {
                if let (Some(id), Some(l)) = (var.as_id(), label_of(other, self.scope)) {
                    if !l.has_xz {
                        self.facts.compared.insert(id.name.clone());
                    }
                }
            }
        });
    }
}

impl Visitor for FactCollector<'_> {
    fn visit_conditional(&mut self, node: &ConditionalStatement) {
        self.note_compare(&node.if_expr);
        walk_conditional(self, node);
    }

    fn visit_case(&mut self, node: &CaseStatement) {
        if let Some(id) = node.cond_expr.as_id() {
            self.facts.compared.insert(id.name.clone());
        }
        self.note_compare(&node.cond_expr);
        for item in &node.case_items {
            accept_stmt(self, &item.body);
        }
    }

    fn visit_continuous_assign(&mut self, node: &ContinuousAssign) {
        self.note_compare(&node.rhs);
    }

    fn visit_assignment(&mut self, node: &Assignment, _kind: AssignKind) {
        self.note_compare(&node.rhs);
        let class = match (&node.rhs, label_of(&node.rhs, self.scope)) {
            (_, Some(l)) if l.has_xz => Rhs::XzLabel,
            (_, Some(_)) => Rhs::Label,
            (Expr::Id(id), None) => Rhs::Var(id.name.clone()),
            _ => Rhs::Other,
        };
        let mut lhs_names = Vec::new();
        match &node.lhs {
            Expr::Id(id) => {
                self.facts.assigns.entry(id.name.clone()).or_default().push(class);
                return;
            }
            other => other.collect_id_names(&mut lhs_names),
        }
        // Partial or concatenated writes disqualify the targets.
        for n in lhs_names {
            self.facts.assigns.entry(n).or_default().push(Rhs::Other);
        }
    }
}

trait ForEachBinary {
    fn for_each_binary(&self, f: &mut dyn FnMut(&Binary));
}

impl ForEachBinary for Expr {
    fn for_each_binary(&self, f: &mut dyn FnMut(&Binary)) {
        match self {
            Expr::Binary(b) => {
                f(b);
                b.lhs.for_each_binary(f);
                b.rhs.for_each_binary(f);
            }
            Expr::Unary(u) => u.operand.for_each_binary(f),
            Expr::Ternary(t) => {
                t.cond.for_each_binary(f);
                t.then_e.for_each_binary(f);
                t.else_e.for_each_binary(f);
            }
            Expr::Concat(c) => c.parts.iter().for_each(|p| p.for_each_binary(f)),
            Expr::Replicate(r) => r.parts.iter().for_each(|p| p.for_each_binary(f)),
            Expr::Call(c) => c.args.iter().for_each(|a| a.for_each_binary(f)),
            Expr::Id(_) | Expr::Indexed(_) | Expr::Const(_) | Expr::Str(_) => {}
        }
    }
}

/// Groups of linked state variables, each in declaration order.
pub fn find_fsm_variables(module: &Module, scope: &Scope) -> Vec<Vec<String>> {
    let mut c = FactCollector {
        scope,
        facts: Facts::default(),
    };
    accept_module(&mut c, module);
    let facts = c.facts;

    let mut eligible: BTreeSet<&str> = scope
        .ids()
        .iter()
        .filter(|d| d.is_variable && d.width_bits.is_some_and(|w| w >= 2))
        .filter(|d| {
            facts
                .assigns
                .get(&d.name)
                .is_some_and(|rs| !rs.is_empty() && rs.iter().all(|r| !matches!(r, Rhs::Other)))
        })
        .map(|d| d.name.as_str())
        .collect();
    loop {
        let before = eligible.len();
        let snapshot = eligible.clone();
        eligible.retain(|n| {
            facts.assigns[*n].iter().all(|r| match r {
                Rhs::Var(v) => snapshot.contains(v.as_str()),
                _ => true,
            })
        });
        if eligible.len() == before {
            break;
        }
    }

    let names: Vec<&str> = scope
        .ids()
        .iter()
        .map(|d| d.name.as_str())
        .filter(|n| eligible.contains(n))
        .collect();
    let pos: HashMap<&str, usize> = names.iter().enumerate().map(|(i, n)| (*n, i)).collect();
    let mut parent: Vec<usize> = (0..names.len()).collect();
    fn find(p: &mut [usize], mut x: usize) -> usize {
        while p[x] != x {
            p[x] = p[p[x]];
            x = p[x];
        }
        x
    }
    for (i, n) in names.iter().enumerate() {
        for r in &facts.assigns[*n] {
            if let Rhs::Var(v) = r {
                let j = pos[v.as_str()];
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                if a != b {
                    parent[a.max(b)] = a.min(b);
                }
            }
        }
    }
    let mut groups: BTreeMap<usize, Vec<String>> = BTreeMap::new();
    for (i, name) in names.iter().enumerate() {
        let root = find(&mut parent, i);
        groups.entry(root).or_default().push(name.to_string());
    }
    groups
        .into_values()
        .filter(|g| {
            let compared = g.iter().any(|n| facts.compared.contains(n));
            let assigned_label = g.iter().any(|n| facts.assigns[n].contains(&Rhs::Label));
            compared && assigned_label
        })
        .collect()
}

// ---------------------------------------------------------------------------
// Transition extraction

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Transition {
    pub state_var: String,
    pub from_state: Label,
    pub to_state: Label,
    pub loc: SourceLoc,
    pub conditions: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StateReset {
    pub state_var: String,
    pub value: Label,
    pub loc: SourceLoc,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct FsmModel {
    pub state_var_names: Vec<String>,
    pub transitions: Vec<Transition>,
    pub resets: Vec<StateReset>,
}

impl FsmModel {
    /// Labels appearing in transitions or resets.
    pub fn states(&self) -> BTreeSet<LabelKey> {
        self.transitions
            .iter()
            .flat_map(|t| [t.from_state.key.clone(), t.to_state.key.clone()])
            .chain(self.resets.iter().map(|r| r.value.key.clone()))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CaseCheck {
    pub width: u32,
    pub covered: u128,
    pub possible: u128,
}

impl CaseCheck {
    pub fn missing(&self) -> u128 {
        self.possible.saturating_sub(self.covered)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CaseOutcome {
    Complete,
    Incomplete(CaseCheck),
    IndeterminateWidth,
}

#[derive(Debug, Default)]
pub struct FsmWalkState {
    pub present_state: Option<Label>,
    pub present_state_var: Option<String>,
    pub conditions: Vec<String>,
    /// Inside a default arm entered without a present state.
    pub in_stateless_default: bool,
    pub pushes: u64,
    pub pops: u64,
}

impl FsmWalkState {
    fn push(&mut self, c: String) {
        self.conditions.push(c);
        self.pushes += 1;
    }

    fn pop(&mut self) {
        self.conditions.pop();
        self.pops += 1;
    }
}

#[derive(Debug, Clone)]
pub struct IncompleteCase {
    pub var: String,
    pub loc: SourceLoc,
    pub check: CaseCheck,
}

struct Extract<'a> {
    scope: &'a Scope,
    group: HashSet<String>,
    state: FsmWalkState,
    fsm: FsmModel,
    incomplete: Vec<IncompleteCase>,
    diagnostics: Vec<Diagnostic>,
    relevant: u64,
}

impl Extract<'_> {
    fn group_var<'e>(&self, e: &'e Expr) -> Option<&'e IdRef> {
        e.as_id().filter(|id| self.group.contains(&id.name))
    }

    /// `var == label` or `label == var` with `var` in the group.
    fn state_test(&self, e: &Expr) -> Option<(String, Label)> {
        let Expr::Binary(b) = e else { return None };
        if !b.op.is_equality() {
            return None;
        }
        for (v, other) in [(&*b.lhs, &*b.rhs), (&*b.rhs, &*b.lhs)] {
            if let Some(id) = self.group_var(v) {
                if let Some(l) = label_of(other, self.scope).filter(|l| !l.has_xz) {
                    return Some((id.name.clone(), l));
                }
            }
        }
        None
    }

    fn with_state(&mut self, var: &str, label: Label, body: &Stmt) {
        let saved_state = self.state.present_state.replace(label);
        let saved_var = self.state.present_state_var.replace(var.to_string());
        let saved_default = std::mem::replace(&mut self.state.in_stateless_default, false);
        accept_stmt(self, body);
        self.state.present_state = saved_state;
        self.state.present_state_var = saved_var;
        self.state.in_stateless_default = saved_default;
    }

    fn with_condition(&mut self, cond: String, body: &Stmt) {
        self.state.push(cond);
        accept_stmt(self, body);
        self.state.pop();
    }
}

impl Visitor for Extract<'_> {
    fn on_node(&mut self, kind: NodeKind) {
        if matches!(
            kind,
            NodeKind::ConditionalStatement
                | NodeKind::CaseStatement
                | NodeKind::BlockingAssign
                | NodeKind::NonBlockingAssign
        ) {
            self.relevant += 1;
        }
    }

    fn visit_conditional(&mut self, node: &ConditionalStatement) {
        if let Some((var, label)) = self.state_test(&node.if_expr) {
            self.with_state(&var, label, &node.then_stmt);
            if let Some(e) = &node.else_stmt {
                accept_stmt(self, e);
            }
            return;
        }
        let cond = node.if_expr.to_string();
        self.with_condition(cond.clone(), &node.then_stmt);
        if let Some(e) = &node.else_stmt {
            self.with_condition(format!("!({cond})"), e);
        }
    }

    fn visit_case(&mut self, node: &CaseStatement) {
        let sel = node.cond_expr.to_string();
        let Some(var) = self.group_var(&node.cond_expr).map(|id| id.name.clone()) else {
            for item in &node.case_items {
                let cond = item_condition(&sel, item);
                self.with_condition(cond, &item.body);
            }
            return;
        };
        match check_complete_case(node, self.scope) {
            CaseOutcome::Incomplete(check) => self.incomplete.push(IncompleteCase {
                var: var.clone(),
                loc: node.loc.clone(),
                check,
            }),
            CaseOutcome::IndeterminateWidth => self.diagnostics.push(Diagnostic::new(
                node.loc.clone(),
                format!("indeterminate width for case selector `{var}`"),
            )),
            CaseOutcome::Complete => {}
        }
        for item in &node.case_items {
            if item.is_default {
                let stateless = self.state.present_state_var.is_none();
                let saved = self.state.in_stateless_default;
                self.state.in_stateless_default = saved || stateless;
                self.with_condition(item_condition(&sel, item), &item.body);
                self.state.in_stateless_default = saved;
                continue;
            }
            for l in &item.labels {
                let label = label_of(l, self.scope).filter(|l| !l.has_xz);
                match label {
                    Some(label) if self.state.present_state_var.is_none() => {
                        self.with_state(&var, label, &item.body);
                    }
                    _ => self.with_condition(format!("{sel} == {l}"), &item.body),
                }
            }
        }
    }

    fn visit_assignment(&mut self, node: &Assignment, _kind: AssignKind) {
        let Some(lhs) = self.group_var(&node.lhs) else {
            return;
        };
        let Some(label) = label_of(&node.rhs, self.scope) else {
            // Another state variable (the state <= next_state link) or an
            // expression: nothing to record.
            return;
        };
        if label.has_xz {
            self.diagnostics.push(Diagnostic::new(
                node.loc.clone(),
                format!(
                    "state assignment `{} = {}` skipped: label has x/z digits",
                    lhs.name, node.rhs
                ),
            ));
            return;
        }
        let state_var = lhs.name.clone();
        match &self.state.present_state {
            Some(from) => self.fsm.transitions.push(Transition {
                state_var,
                from_state: from.clone(),
                to_state: label,
                loc: node.loc.clone(),
                conditions: self.state.conditions.clone(),
            }),
            None if self.state.in_stateless_default => {}
            None => self.fsm.resets.push(StateReset {
                state_var,
                value: label,
                loc: node.loc.clone(),
            }),
        }
    }

    fn visit_continuous_assign(&mut self, _node: &ContinuousAssign) {}
}

fn item_condition(sel: &str, item: &CaseItem) -> String {
    if item.is_default {
        return format!("{sel} == default");
    }
    item.labels
        .iter()
        .map(|l| format!("{sel} == {l}"))
        .collect::<Vec<_>>()
        .join(" || ")
}

pub struct Extraction {
    pub fsm: FsmModel,
    pub incomplete: Vec<IncompleteCase>,
    pub diagnostics: Vec<Diagnostic>,
    pub relevant: u64,
    pub balanced: bool,
}

pub fn extract_transitions(module: &Module, scope: &Scope, group: &[String]) -> Extraction {
    let mut v = Extract {
        scope,
        group: group.iter().cloned().collect(),
        state: FsmWalkState::default(),
        fsm: FsmModel {
            state_var_names: group.to_vec(),
            ..FsmModel::default()
        },
        incomplete: Vec::new(),
        diagnostics: Vec::new(),
        relevant: 0,
    };
    accept_module(&mut v, module);
    let balanced = v.state.pushes == v.state.pops && v.state.conditions.is_empty();
    Extraction {
        fsm: v.fsm,
        incomplete: v.incomplete,
        diagnostics: v.diagnostics,
        relevant: v.relevant,
        balanced,
    }
}

// ---------------------------------------------------------------------------
// Analysis

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum StateIssueKind {
    Unreachable,
    Deadlock,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StateIssue {
    pub kind: StateIssueKind,
    pub state: Label,
    pub state_var: String,
    /// First transition out of (unreachable) or into (deadlock) the state.
    pub witness: SourceLoc,
}

/// unreachable = from − (to ∪ resets); deadlock = to − from. One issue per
/// state, ordered by kind then label.
pub fn analyze_transitions(fsm: &FsmModel) -> Vec<StateIssue> {
    let from: BTreeSet<&LabelKey> = fsm.transitions.iter().map(|t| &t.from_state.key).collect();
    let to: BTreeSet<&LabelKey> = fsm.transitions.iter().map(|t| &t.to_state.key).collect();
    let resets: BTreeSet<&LabelKey> = fsm.resets.iter().map(|r| &r.value.key).collect();
    let mut issues = Vec::new();
    for k in &from {
        if !to.contains(k) && !resets.contains(k) {
            let t = fsm
                .transitions
                .iter()
                .find(|t| &t.from_state.key == *k)
                .expect("key comes from a transition");
            issues.push(StateIssue {
                kind: StateIssueKind::Unreachable,
                state: t.from_state.clone(),
                state_var: t.state_var.clone(),
                witness: t.loc.clone(),
            });
        }
    }
    for k in &to {
        if !from.contains(k) {
            let t = fsm
                .transitions
                .iter()
                .find(|t| &t.to_state.key == *k)
                .expect("key comes from a transition");
            issues.push(StateIssue {
                kind: StateIssueKind::Deadlock,
                state: t.to_state.clone(),
                state_var: t.state_var.clone(),
                witness: t.loc.clone(),
            });
        }
    }
    issues
}

const MAX_WILDCARD_WIDTH: u32 = 20;

/// Complete iff the case has a default or its distinct labels cover every
/// value of the selector's width.
pub fn check_complete_case(node: &CaseStatement, scope: &Scope) -> CaseOutcome {
    let width = node.cond_expr.as_id().and_then(|id| scope.width_of(&id.name));
    let Some(width) = width else {
        return if node.has_default {
            CaseOutcome::Complete
        } else {
            CaseOutcome::IndeterminateWidth
        };
    };
    if node.has_default {
        return CaseOutcome::Complete;
    }
    let mask = if width >= 128 { u128::MAX } else { (1u128 << width) - 1 };
    let possible = if width >= 128 { u128::MAX } else { 1u128 << width };
    let wildcards = node.kind != CaseKind::Case;
    let mut values: HashSet<u128> = HashSet::new();
    let mut symbols: BTreeSet<String> = BTreeSet::new();
    for item in node.case_items.iter().filter(|i| !i.is_default) {
        for l in &item.labels {
            if let Expr::Const(c) = l {
                if c.value.value.is_none() {
                    if wildcards && width <= MAX_WILDCARD_WIDTH {
                        if let Some((v, care)) = c.value.wildcard_pattern(width, node.kind == CaseKind::Casex) {
                            enumerate_pattern(v, care, mask, &mut values);
                        }
                    }
                    // In a plain case an x/z label matches no two-state value.
                    continue;
                }
            }
            match label_of(l, scope) {
                Some(Label {
                    key: LabelKey::Value(v),
                    ..
                }) => {
                    values.insert(v & mask);
                }
                Some(label) => {
                    symbols.insert(label.text);
                }
                None => {
                    symbols.insert(l.to_string());
                }
            }
        }
    }
    let covered = (values.len() + symbols.len()) as u128;
    if covered >= possible {
        CaseOutcome::Complete
    } else {
        CaseOutcome::Incomplete(CaseCheck {
            width,
            covered,
            possible,
        })
    }
}

fn enumerate_pattern(value: u128, care: u128, mask: u128, out: &mut HashSet<u128>) {
    let free = !care & mask;
    let base = value & care & mask;
    let mut sub = free;
    loop {
        out.insert(base | sub);
        if sub == 0 {
            break;
        }
        sub = (sub - 1) & free;
    }
}

// ---------------------------------------------------------------------------

pub fn scan(ctx: &ModuleContext<'_>) -> ScannerOutput {
    let module = &ctx.module.name;
    let mut out = ScannerOutput::default();
    let mut relevant = 0;
    for group in find_fsm_variables(ctx.module, ctx.scope) {
        let ex = extract_transitions(ctx.module, ctx.scope, &group);
        // Every group walks the same nodes; count them once.
        relevant = relevant.max(ex.relevant);
        out.diagnostics.extend(ex.diagnostics);
        for ic in ex.incomplete {
            let message = format!(
                "case on `{}` ({} bit{}) covers {} of {} values and has no default; {} missing",
                ic.var,
                ic.check.width,
                if ic.check.width == 1 { "" } else { "s" },
                ic.check.covered,
                ic.check.possible,
                ic.check.missing()
            );
            out.findings.push(Finding::new(
                Cwe::C1245,
                KIND_INCOMPLETE_CASE,
                module,
                ic.loc,
                vec![ic.var],
                message,
            ));
        }
        for issue in analyze_transitions(&ex.fsm) {
            let (kind, message) = match issue.kind {
                StateIssueKind::Unreachable => (
                    KIND_UNREACHABLE,
                    format!(
                        "state `{}` of `{}` has outgoing transitions but no transition or reset enters it",
                        issue.state, issue.state_var
                    ),
                ),
                StateIssueKind::Deadlock => (
                    KIND_DEADLOCK,
                    format!(
                        "state `{}` of `{}` is entered but has no outgoing transition",
                        issue.state, issue.state_var
                    ),
                ),
            };
            out.findings.push(Finding::new(
                Cwe::C1245,
                kind,
                module,
                issue.witness,
                vec![issue.state_var, issue.state.text],
                message,
            ));
        }
    }
    out.tally = NodeTally {
        relevant,
        gated: relevant,
    };
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scanners::testutil::module;
    use crate::scope::build_scope;

    fn groups(src: &str) -> Vec<Vec<String>> {
        let m = module(src);
        find_fsm_variables(&m, &build_scope(&m))
    }

    fn extract(src: &str) -> Extraction {
        let m = module(src);
        let s = build_scope(&m);
        let g = find_fsm_variables(&m, &s);
        assert_eq!(g.len(), 1, "{g:?}");
        extract_transitions(&m, &s, &g[0])
    }

    fn edges(fsm: &FsmModel) -> Vec<(String, String)> {
        fsm.transitions
            .iter()
            .map(|t| (t.from_state.text.clone(), t.to_state.text.clone()))
            .collect()
    }

    const TWO_PROCESS: &str = "module fsm(input clk, input rst, input go);
  localparam S0 = 2'd0, S1 = 2'd1, S2 = 2'd2;
  reg [1:0] state, next_state;
  always @(posedge clk)
    if (rst) state <= S0;
    else state <= next_state;
  always @* begin
    next_state = state;
    case (state)
      S0: if (go) next_state = S1;
      S1: next_state = S2;
      S2: next_state = S0;
      default: next_state = S0;
    endcase
  end
endmodule";

    #[test]
    fn state_and_next_state_form_one_group() {
        assert_eq!(
            groups(TWO_PROCESS),
            vec![vec!["state".to_string(), "next_state".to_string()]]
        );
    }

    #[test]
    fn sum_has_no_fsm() {
        let src = "module sum(input wire [7:0] a, output [7:0] out);
    always @(a) begin out = a + 1; end
endmodule";
        assert!(groups(src).is_empty());
    }

    #[test]
    fn counter_is_not_an_fsm() {
        let src = "module c(input clk);
  reg [7:0] counter;
  always @(posedge clk) begin
    if (counter == 8'd10) counter <= 0;
    else counter <= counter + 1;
  end
endmodule";
        assert!(groups(src).is_empty());
    }

    #[test]
    fn one_bit_and_wire_are_not_candidates() {
        let src = "module m; reg f; wire [1:0] w;
  always @(posedge clk) begin if (f == 1'b1) f <= 1'b0; end
  assign w = 2'd1;
endmodule";
        assert!(groups(src).is_empty());
    }

    #[test]
    fn two_process_transitions() {
        let ex = extract(TWO_PROCESS);
        assert!(ex.balanced);
        assert_eq!(
            edges(&ex.fsm),
            vec![
                ("S0".to_string(), "S1".to_string()),
                ("S1".to_string(), "S2".to_string()),
                ("S2".to_string(), "S0".to_string()),
            ]
        );
        assert_eq!(ex.fsm.transitions[0].conditions, vec!["go"]);
        // `if (rst) state <= S0` is a reset; the default arm is ignored.
        let resets: Vec<_> = ex.fsm.resets.iter().map(|r| r.value.text.as_str()).collect();
        assert_eq!(resets, vec!["S0"]);
        assert!(ex.incomplete.is_empty());
        assert!(analyze_transitions(&ex.fsm).is_empty());
    }

    #[test]
    fn macro_states_and_deadlock() {
        let src = "module mod_exp(input clk, input reset);
  reg [1:0] state;
  always @(posedge clk) begin
    if (reset) state <= `IDLE;
    else case (state)
      `IDLE: state <= `UPDATE;
      `UPDATE: begin
        if (exponent_reg != 'd0) begin
        end
        else state <= `HOLD;
      end
      `HOLD: begin
      end
    endcase
  end
endmodule";
        let ex = extract(src);
        let hold = ex.fsm.transitions.iter().find(|t| t.to_state.text == "HOLD").unwrap();
        assert_eq!(hold.from_state.text, "UPDATE");
        assert_eq!(hold.conditions, vec!["!(reset)", "!(exponent_reg != 'd0)"]);
        let issues = analyze_transitions(&ex.fsm);
        assert_eq!(issues.len(), 1);
        assert_eq!(issues[0].kind, StateIssueKind::Deadlock);
        assert_eq!(issues[0].state.text, "HOLD");
        assert_eq!(issues[0].witness.line, 10);
        // Three macro labels, 2-bit selector, no default.
        assert_eq!(ex.incomplete.len(), 1);
    }

    #[test]
    fn if_equality_sets_present_state() {
        let src = "module m(input clk, input en);
  reg [1:0] s;
  always @(posedge clk) begin
    if (s == 2'd1) begin
      if (en) s <= 2'd2;
    end else if (2'd2 == s) s <= 2'd1;
  end
endmodule";
        let ex = extract(src);
        let t: Vec<_> = ex
            .fsm
            .transitions
            .iter()
            .map(|t| (t.from_state.text.clone(), t.to_state.text.clone(), t.conditions.clone()))
            .collect();
        assert_eq!(
            t,
            vec![
                ("1".into(), "2".into(), vec!["en".to_string()]),
                ("2".into(), "1".into(), vec![]),
            ]
        );
    }

    #[test]
    fn normalized_labels_share_identity() {
        assert_eq!(
            label_of(&expr_of("2'b01"), &Scope::default()).unwrap().key,
            label_of(&expr_of("2'd1"), &Scope::default()).unwrap().key
        );
    }

    fn expr_of(text: &str) -> Expr {
        let m = module(&format!("module m; assign x = {text}; endmodule"));
        match &m.items[0] {
            Item::Assign(a) => a.rhs.clone(),
            _ => unreachable!(),
        }
    }

    fn model(edges: &[(u128, u128)], resets: &[u128]) -> FsmModel {
        let loc = SourceLoc::new("t.v".into(), 1, 1);
        FsmModel {
            state_var_names: vec!["s".into()],
            transitions: edges
                .iter()
                .map(|&(a, b)| Transition {
                    state_var: "s".into(),
                    from_state: Label::value(a),
                    to_state: Label::value(b),
                    loc: loc.clone(),
                    conditions: vec![],
                })
                .collect(),
            resets: resets
                .iter()
                .map(|&r| StateReset {
                    state_var: "s".into(),
                    value: Label::value(r),
                    loc: loc.clone(),
                })
                .collect(),
        }
    }

    fn summary(fsm: &FsmModel) -> Vec<(StateIssueKind, String)> {
        analyze_transitions(fsm)
            .into_iter()
            .map(|i| (i.kind, i.state.text))
            .collect()
    }

    #[test]
    fn unreachable_state_figure() {
        let fsm = model(&[(4, 1), (1, 2), (2, 1)], &[1]);
        assert_eq!(summary(&fsm), vec![(StateIssueKind::Unreachable, "4".to_string())]);
    }

    #[test]
    fn deadlock_figure() {
        let fsm = model(&[(1, 4), (1, 2), (2, 1)], &[1]);
        assert_eq!(summary(&fsm), vec![(StateIssueKind::Deadlock, "4".to_string())]);
    }

    #[test]
    fn self_loop_is_clean() {
        assert!(summary(&model(&[(1, 1)], &[1])).is_empty());
        assert!(summary(&model(&[], &[1])).is_empty());
    }

    fn case_outcome(decl: &str, kind: &str, items: &str) -> CaseOutcome {
        let src = format!("module m; {decl} always @* {kind} (s) {items} endcase endmodule");
        let m = module(&src);
        let scope = build_scope(&m);
        let Item::Always(a) = m.items.last().unwrap() else {
            panic!()
        };
        let Stmt::EventControl(ec) = &a.body else { panic!() };
        let Stmt::Case(c) = &*ec.body else { panic!() };
        check_complete_case(c, &scope)
    }

    #[test]
    fn incomplete_four_bit_case() {
        let out = case_outcome(
            "localparam s12 = 4'd12, s14 = 4'd14, s15 = 4'd15; reg [3:0] s;",
            "case",
            "s12: x = 1; s14: x = 2; s15: x = 3;",
        );
        let CaseOutcome::Incomplete(c) = out else {
            panic!("{out:?}")
        };
        assert_eq!((c.covered, c.possible, c.missing()), (3, 16, 13));
    }

    #[test]
    fn default_makes_complete() {
        assert_eq!(
            case_outcome("reg [3:0] s;", "case", "0: x = 1; default: x = 0;"),
            CaseOutcome::Complete
        );
    }

    #[test]
    fn four_labels_cover_two_bits() {
        assert_eq!(
            case_outcome(
                "reg [1:0] s;",
                "case",
                "2'b00: x = 0; 2'b01: x = 1; 2'd2: x = 2; 3: x = 3;"
            ),
            CaseOutcome::Complete
        );
    }

    #[test]
    fn duplicate_normalized_labels_count_once() {
        let out = case_outcome(
            "reg [1:0] s;",
            "case",
            "2'b01: x = 0; 2'd1: x = 1; 2'd2: x = 2; 3: x = 3;",
        );
        assert!(matches!(out, CaseOutcome::Incomplete(CaseCheck { covered: 3, .. })));
    }

    #[test]
    fn casez_wildcards_cover_ranges() {
        assert_eq!(
            case_outcome("reg [2:0] s;", "casez", "3'b1??: x = 0; 3'b0?1: x = 1; 3'b0?0: x = 2;"),
            CaseOutcome::Complete
        );
        // In a plain case the same labels match nothing.
        assert!(matches!(
            case_outcome("reg [2:0] s;", "case", "3'b1??: x = 0;"),
            CaseOutcome::Incomplete(CaseCheck { covered: 0, .. })
        ));
    }

    #[test]
    fn unknown_width_is_indeterminate() {
        assert_eq!(
            case_outcome("reg [N-1:0] s;", "case", "0: x = 1;"),
            CaseOutcome::IndeterminateWidth
        );
    }

    #[test]
    fn xz_state_assignment_is_skipped_with_diagnostic() {
        let src = "module m(input clk);
  reg [1:0] s;
  always @(posedge clk)
    case (s)
      2'd0: s <= 2'd1;
      2'd1: s <= 2'bx0;
      default: s <= 2'd0;
    endcase
endmodule";
        let ex = extract(src);
        assert_eq!(ex.fsm.transitions.len(), 1);
        assert_eq!(ex.diagnostics.len(), 1);
        assert!(ex.diagnostics[0].message.contains("x/z"));
    }

    #[test]
    fn transitions_ignore_statement_order_within_item() {
        let a = "module m(input clk, input a, input b);
  reg [1:0] s;
  always @(posedge clk)
    case (s)
      2'd0: begin if (a) s <= 2'd1; if (b) s <= 2'd2; end
      default: s <= 2'd0;
    endcase
endmodule";
        let b = a.replace(
            "begin if (a) s <= 2'd1; if (b) s <= 2'd2; end",
            "begin if (b) s <= 2'd2; if (a) s <= 2'd1; end",
        );
        let set = |src: &str| {
            let mut e = edges(&extract(src).fsm);
            e.sort();
            e
        };
        assert_eq!(set(a), set(&b));
    }

    #[test]
    fn non_fsm_case_pushes_selector_conditions() {
        let src = "module m(input clk, input [1:0] mode);
  reg [1:0] s;
  always @(posedge clk)
    case (s)
      2'd0: case (mode)
              2'd3: s <= 2'd1;
            endcase
      default: s <= 2'd0;
    endcase
endmodule";
        let ex = extract(src);
        assert_eq!(ex.fsm.transitions[0].conditions, vec!["mode == 2'd3"]);
        assert!(ex.balanced);
    }
}
