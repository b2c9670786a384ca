//! Write-interface registers and the condition signals guarding them.
//!
//! Every non-blocking assignment whose right-hand side reads a wdata-like
//! signal is mapped to the condition signals in force at that point. Empty
//! guard sets and uneven protection across register arrays are reported.

use std::collections::BTreeMap;

use crate::ast::*;
use crate::finding::{Cwe, Finding};
use crate::loc::SourceLoc;
use crate::rules::{Category, Rulebook};
use crate::visit::{
    accept_expr, accept_module, accept_stmt, walk_always, walk_assignment, walk_ternary, AssignKind, Visitor,
};

use super::cwe1234::quote_list;
use super::{ModuleContext, NodeTally, ScannerOutput};

pub const KIND_UNPROTECTED: &str = "unprotected-register";
pub const KIND_LESS_PROTECTED: &str = "less-protected-register";
pub const KIND_NON_IDENTICAL: &str = "non-identical-control-sets";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ControlEntry {
    /// `base` or `base[index]`.
    pub key: String,
    pub base: String,
    pub index: Option<String>,
    pub controls: Vec<String>,
    pub loc: SourceLoc,
}

/// Entries in the order their assignments were visited.
pub type ControlMap = Vec<ControlEntry>;

#[derive(Debug, Default)]
pub struct CtrlWalkState {
    pub control_v: Vec<String>,
    pub is_control: bool,
    pub is_rhs: bool,
    pub is_lhs: bool,
    pub is_wdata: bool,
    pub in_nba: bool,
}

struct Scan<'a> {
    rules: &'a Rulebook,
    state: CtrlWalkState,
    map: ControlMap,
    tally: NodeTally,
    /// Relevant-node count when the current non-blocking assignment began.
    nba_start: u64,
    current_loc: Option<SourceLoc>,
}

impl Scan<'_> {
    fn reference(&mut self, base: &str, full: &str, index: Option<&str>) {
        let s = &mut self.state;
        if s.is_rhs && self.rules.matches(base, Category::Wdata) {
            s.is_wdata = true;
        } else if s.is_control {
            s.control_v.push(full.to_string());
        } else if s.is_lhs {
            let mut controls = Vec::new();
            for c in &s.control_v {
                if !controls.contains(c) {
                    controls.push(c.clone());
                }
            }
            self.map.push(ControlEntry {
                key: full.to_string(),
                base: base.to_string(),
                index: index.map(str::to_string),
                controls,
                loc: self.current_loc.clone().expect("inside an assignment"),
            });
        }
    }
}

impl Visitor for Scan<'_> {
    fn on_node(&mut self, kind: NodeKind) {
        if matches!(
            kind,
            NodeKind::AlwaysConstruct
                | NodeKind::Ternary
                | NodeKind::NonBlockingAssign
                | NodeKind::ConditionalStatement
                | NodeKind::IdRef
                | NodeKind::IndexedRef
        ) {
            self.tally.relevant += 1;
        }
    }

    fn visit_always(&mut self, node: &AlwaysConstruct) {
        self.state.control_v.clear();
        walk_always(self, node);
        debug_assert!(self.state.control_v.is_empty());
    }

    fn visit_conditional(&mut self, node: &ConditionalStatement) {
        let depth = self.state.control_v.len();
        let outer = std::mem::replace(&mut self.state.is_control, true);
        accept_expr(self, &node.if_expr);
        self.state.is_control = outer;
        accept_stmt(self, &node.then_stmt);
        if let Some(e) = &node.else_stmt {
            accept_stmt(self, e);
        }
        self.state.control_v.truncate(depth);
    }

    fn visit_assignment(&mut self, node: &Assignment, kind: AssignKind) {
        if kind == AssignKind::Blocking {
            walk_assignment(self, node);
            return;
        }
        let depth = self.state.control_v.len();
        self.nba_start = self.tally.relevant - 1;
        self.state.in_nba = true;
        self.state.is_wdata = false;
        self.state.is_rhs = true;
        accept_expr(self, &node.rhs);
        self.state.is_rhs = false;
        if self.state.is_wdata {
            self.current_loc = Some(node.loc.clone());
            self.state.is_lhs = true;
            accept_expr(self, &node.lhs);
            self.state.is_lhs = false;
            self.tally.gated += self.tally.relevant - self.nba_start;
        }
        // Ternary guards belong to this assignment only.
        self.state.control_v.truncate(depth);
        self.state.in_nba = false;
    }

    fn visit_ternary(&mut self, node: &Ternary) {
        if !self.state.in_nba || !self.state.is_rhs || self.state.is_control {
            walk_ternary(self, node);
            return;
        }
        accept_expr(self, &node.then_e);
        accept_expr(self, &node.else_e);
        self.state.is_control = true;
        accept_expr(self, &node.cond);
        self.state.is_control = false;
    }

    fn visit_id_ref(&mut self, node: &IdRef) {
        self.reference(&node.name, &node.name, None);
    }

    fn visit_indexed_ref(&mut self, node: &IndexedRef) {
        let full = node.full_name();
        self.reference(&node.base.name, &full, Some(&node.index_text));
    }
}

pub fn build_control_map(module: &Module, rules: &Rulebook) -> ControlMap {
    run(module, rules).0
}

fn run(module: &Module, rules: &Rulebook) -> (ControlMap, NodeTally, usize) {
    let mut v = Scan {
        rules,
        state: CtrlWalkState::default(),
        map: Vec::new(),
        tally: NodeTally::default(),
        nba_start: 0,
        current_loc: None,
    };
    accept_module(&mut v, module);
    (v.map, v.tally, v.state.control_v.len())
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ProtectionIssue {
    Unprotected {
        entry: ControlEntry,
    },
    LessProtected {
        entry: ControlEntry,
        controls: Vec<String>,
        group_max: usize,
    },
    NonIdentical {
        base: String,
        odd: Vec<ControlEntry>,
        odd_sets: Vec<Vec<String>>,
        loc: SourceLoc,
    },
}

/// Drops names matching the prune category; idempotent.
pub fn prune(controls: &[String], rules: &Rulebook) -> Vec<String> {
    controls
        .iter()
        .filter(|c| !rules.matches(c, Category::ControlPrune))
        .cloned()
        .collect()
}

pub fn analyze_protection(map: &ControlMap, rules: &Rulebook) -> Vec<ProtectionIssue> {
    // One entry per key: the assignment with the fewest guards decides.
    let mut per_key: Vec<(ControlEntry, Vec<String>)> = Vec::new();
    for e in map {
        let pruned = prune(&e.controls, rules);
        match per_key.iter_mut().find(|(k, _)| k.key == e.key) {
            Some(slot) if pruned.len() < slot.1.len() => *slot = (e.clone(), pruned),
            Some(_) => {}
            None => per_key.push((e.clone(), pruned)),
        }
    }

    let mut issues = Vec::new();
    for (e, pruned) in &per_key {
        if pruned.is_empty() {
            issues.push(ProtectionIssue::Unprotected { entry: e.clone() });
        }
    }

    let mut groups: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (i, (e, _)) in per_key.iter().enumerate() {
        if e.index.is_some() {
            groups.entry(e.base.as_str()).or_default().push(i);
        }
    }
    for (base, members) in groups {
        if members.len() < 2 {
            continue;
        }
        let sets: Vec<Vec<String>> = members
            .iter()
            .map(|&i| {
                let mut s = per_key[i].1.clone();
                s.sort();
                s
            })
            .collect();
        let max = sets.iter().map(Vec::len).max().unwrap_or(0);
        for (&i, s) in members.iter().zip(&sets) {
            if !s.is_empty() && s.len() < max {
                issues.push(ProtectionIssue::LessProtected {
                    entry: per_key[i].0.clone(),
                    controls: per_key[i].1.clone(),
                    group_max: max,
                });
            }
        }
        if sets.iter().all(|s| *s == sets[0]) {
            continue;
        }
        let mut freq: BTreeMap<&Vec<String>, usize> = BTreeMap::new();
        for s in &sets {
            *freq.entry(s).or_default() += 1;
        }
        let top = freq.values().copied().max().unwrap_or(0);
        let modal: Vec<&Vec<String>> = freq.iter().filter(|(_, &n)| n == top).map(|(s, _)| *s).collect();
        let odd_idx: Vec<usize> = if modal.len() == 1 {
            (0..sets.len()).filter(|&k| &sets[k] != modal[0]).collect()
        } else {
            (0..sets.len()).collect()
        };
        let odd: Vec<ControlEntry> = odd_idx.iter().map(|&k| per_key[members[k]].0.clone()).collect();
        let odd_sets = odd_idx.iter().map(|&k| per_key[members[k]].1.clone()).collect();
        let loc = odd[0].loc.clone();
        issues.push(ProtectionIssue::NonIdentical {
            base: base.to_string(),
            odd,
            odd_sets,
            loc,
        });
    }
    issues
}

pub fn scan(ctx: &ModuleContext<'_>) -> ScannerOutput {
    let (map, tally, _) = run(ctx.module, ctx.rules);
    let module = &ctx.module.name;
    let wdata_kws = ctx.rules.category(Category::Wdata).match_list.clone();
    let findings = analyze_protection(&map, ctx.rules)
        .into_iter()
        .map(|issue| match issue {
            ProtectionIssue::Unprotected { entry } => {
                let message = format!(
                    "register `{}` is written from the data bus with no guarding control signal",
                    entry.key
                );
                Finding::new(
                    Cwe::C1262,
                    KIND_UNPROTECTED,
                    module,
                    entry.loc,
                    vec![entry.key],
                    message,
                )
                .with_keywords(wdata_kws.clone())
            }
            ProtectionIssue::LessProtected {
                entry,
                controls,
                group_max,
            } => {
                let message = format!(
                    "register `{}` is guarded by {} control signal(s) ({}) while other entries of `{}` have {}",
                    entry.key,
                    controls.len(),
                    quote_list(&controls),
                    entry.base,
                    group_max
                );
                Finding::new(
                    Cwe::C1262,
                    KIND_LESS_PROTECTED,
                    module,
                    entry.loc,
                    vec![entry.key],
                    message,
                )
                .with_keywords(wdata_kws.clone())
            }
            ProtectionIssue::NonIdentical {
                base,
                odd,
                odd_sets,
                loc,
            } => {
                let detail: Vec<String> = odd
                    .iter()
                    .zip(&odd_sets)
                    .map(|(e, s)| format!("`{}` guarded by {{{}}}", e.key, s.join(", ")))
                    .collect();
                let message = format!(
                    "entries of register array `{}` have non-identical control sets: {}",
                    base,
                    detail.join("; ")
                );
                let mut signals = vec![base];
                signals.extend(odd.iter().map(|e| e.key.clone()));
                Finding::new(Cwe::C1262, KIND_NON_IDENTICAL, module, loc, signals, message)
            }
        })
        .collect();
    ScannerOutput {
        findings,
        diagnostics: Vec::new(),
        tally,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scanners::testutil::module;
    use proptest::prelude::*;

    const REGLK: &str = "module reglk_wrapper(input clk_i, input rst_ni, input jtag_unlock,
  input en, input we, input [7:0] address, input [31:0] wdata, input [7:0] reglk_ctrl);
  reg [31:0] reglk_mem [0:5];
  always @(posedge clk_i) begin
    if (~rst_ni) begin
      reglk_mem[0] <= 0;
    end else if (jtag_unlock) begin
      if (~rst_ni) ;
      else if (en && we)
        case (address[7:3])
          0: reglk_mem[0] <= reglk_ctrl[3] ? reglk_mem[0] : wdata;
          1: reglk_mem[1] <= reglk_ctrl[1] ? reglk_mem[1] : wdata;
          2: reglk_mem[2] <= reglk_ctrl[1] ? reglk_mem[2] : wdata;
          3: reglk_mem[3] <= reglk_ctrl[1] ? reglk_mem[3] : wdata;
          4: reglk_mem[4] <= reglk_ctrl[1] ? reglk_mem[4] : wdata;
          5: reglk_mem[5] <= reglk_ctrl[1] ? reglk_mem[5] : wdata;
          default: ;
        endcase
    end
  end
endmodule";

    fn map_of(src: &str) -> ControlMap {
        build_control_map(&module(src), &Rulebook::defaults())
    }

    #[test]
    fn reglk_entry_zero_controls() {
        let map = map_of(REGLK);
        let e0 = map.iter().find(|e| e.key == "reglk_mem[0]").unwrap();
        let pruned = prune(&e0.controls, &Rulebook::defaults());
        assert_eq!(pruned, vec!["jtag_unlock", "en", "we", "reglk_ctrl[3]"]);
        let e1 = map.iter().find(|e| e.key == "reglk_mem[1]").unwrap();
        assert_eq!(
            prune(&e1.controls, &Rulebook::defaults()),
            vec!["jtag_unlock", "en", "we", "reglk_ctrl[1]"]
        );
        // Reset assignment has no wdata, so it is not mapped.
        assert_eq!(map.len(), 6);
    }

    #[test]
    fn reglk_non_identical_names_the_odd_entry() {
        let rules = Rulebook::defaults();
        let issues = analyze_protection(&map_of(REGLK), &rules);
        assert_eq!(issues.len(), 1);
        let ProtectionIssue::NonIdentical { base, odd, loc, .. } = &issues[0] else {
            panic!("{issues:?}");
        };
        assert_eq!(base, "reglk_mem");
        assert_eq!(odd.len(), 1);
        assert_eq!(odd[0].key, "reglk_mem[0]");
        assert_eq!(loc.line, 11);
    }

    #[test]
    fn every_entry_different_names_all() {
        let src = "module acct(input clk, input [31:0] wdata, input [15:0] reglk_ctrl, input [10:0] address);
  always @(posedge clk)
    case (address[10:3])
      0: acct_mem[00] <= reglk_ctrl[5] ? acct_mem[00] : wdata;
      3: acct_mem[03] <= reglk_ctrl[13] ? acct_mem[03] : wdata;
      6: acct_mem[06] <= reglk_ctrl[1] ? acct_mem[06] : wdata;
      9: acct_mem[09] <= reglk_ctrl[7] ? acct_mem[09] : wdata;
      default: ;
    endcase
endmodule";
        let issues = analyze_protection(&map_of(src), &Rulebook::defaults());
        assert_eq!(issues.len(), 1);
        let ProtectionIssue::NonIdentical { odd, .. } = &issues[0] else {
            panic!()
        };
        assert_eq!(odd.len(), 4);
    }

    #[test]
    fn clocked_wdata_without_guard_is_unprotected() {
        let map = map_of("module m; always @(posedge clk) r <= wdata; endmodule");
        assert_eq!(map.len(), 1);
        assert!(map[0].controls.is_empty());
        let issues = analyze_protection(&map, &Rulebook::defaults());
        assert!(matches!(&issues[0], ProtectionIssue::Unprotected { entry } if entry.key == "r"));
    }

    #[test]
    fn no_wdata_no_entry() {
        assert!(map_of("module m; always @(posedge clk) r <= a + b; endmodule").is_empty());
    }

    #[test]
    fn guarded_register_is_fine() {
        let src = "module m; always @(posedge clk) if (we) r <= wdata; endmodule";
        assert!(analyze_protection(&map_of(src), &Rulebook::defaults()).is_empty());
    }

    #[test]
    fn clock_and_reset_guards_are_pruned() {
        let src = "module m; always @(posedge clk) if (!rst_n) r <= 0; else if (clk_en) r <= wdata; endmodule";
        let issues = analyze_protection(&map_of(src), &Rulebook::defaults());
        assert_eq!(issues.len(), 1);
        assert!(matches!(issues[0], ProtectionIssue::Unprotected { .. }));
    }

    #[test]
    fn fewer_guards_in_array_is_less_protected() {
        let src = "module m; always @(posedge clk) begin
  if (we && unlock) mem[0] <= wdata;
  if (we) mem[1] <= wdata;
end endmodule";
        let issues = analyze_protection(&map_of(src), &Rulebook::defaults());
        let kinds: Vec<_> = issues
            .iter()
            .map(|i| match i {
                ProtectionIssue::Unprotected { .. } => "u",
                ProtectionIssue::LessProtected { entry, .. } => {
                    assert_eq!(entry.key, "mem[1]");
                    "l"
                }
                ProtectionIssue::NonIdentical { .. } => "n",
            })
            .collect();
        assert_eq!(kinds, vec!["l", "n"]);
    }

    #[test]
    fn then_branch_never_sees_else_conditions() {
        let src = "module m; always @(posedge clk)
  if (a) r1 <= wdata;
  else if (b) r2 <= wdata;
  else r3 <= wdata;
endmodule";
        let map = map_of(src);
        let get = |k: &str| map.iter().find(|e| e.key == k).unwrap().controls.clone();
        assert_eq!(get("r1"), vec!["a"]);
        assert_eq!(get("r2"), vec!["a", "b"]);
        assert_eq!(get("r3"), vec!["a", "b"]);
    }

    #[test]
    fn blocking_assignments_are_not_mapped() {
        assert!(map_of("module m; always @* r = wdata; endmodule").is_empty());
    }

    #[test]
    fn non_indexed_keys_do_not_group() {
        let src = "module m; always @(posedge clk) begin
  if (a) mem <= wdata;
  if (a && b) mem[1] <= wdata;
end endmodule";
        assert!(analyze_protection(&map_of(src), &Rulebook::defaults()).is_empty());
    }

    fn nested(depth: u32, seed: u64) -> String {
        let mut s = String::new();
        let mut x = seed;
        for d in 0..depth {
            x = x.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            match x >> 62 {
                0 => s.push_str(&format!("if (c{d} && k{d}) begin r{d} <= wdata; ")),
                1 => s.push_str(&format!("if (c{d}) begin r{d} <= s{d} ? r{d} : wdata; ")),
                2 => s.push_str(&format!("if (c{d}) begin end else begin r{d} <= wdata; ")),
                _ => s.push_str(&format!("begin q{d} <= c{d} ? a : b; ")),
            }
        }
        for _ in 0..depth {
            s.push_str("end ");
        }
        s
    }

    proptest! {
        #[test]
        fn stack_is_empty_after_each_always(depth in 0u32..12, seed in any::<u64>()) {
            let src = format!(
                "module m; always @(posedge clk) begin {} end always @* begin {} end endmodule",
                nested(depth, seed),
                nested(depth, seed ^ 0xff)
            );
            let (map, _, left) = run(&module(&src), &Rulebook::defaults());
            prop_assert_eq!(left, 0);
            for e in &map {
                prop_assert!(e.controls.len() <= 2 * depth as usize + 1);
            }
        }

        #[test]
        fn prune_is_idempotent(names in prop::collection::vec("[a-z_]{1,8}", 0..6)) {
            let rules = Rulebook::defaults();
            let once = prune(&names, &rules);
            prop_assert_eq!(prune(&once, &rules), once.clone());
            let mut rev = names.clone();
            rev.reverse();
            let mut a = prune(&rev, &rules);
            let mut b = once;
            a.sort();
            b.sort();
            prop_assert_eq!(a, b);
        }
    }
}
