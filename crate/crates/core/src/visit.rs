//! Depth-first traversal over the syntax tree.
//!
//! Every `visit_*` method defaults to the matching `walk_*` function, which
//! descends into children in source order. A visitor that overrides a method
//! decides for itself whether and in which order to descend, by calling the
//! `accept_*` functions on the children it cares about. `accept_*` reports
//! the node to [`Visitor::on_node`] before dispatching, so counting happens
//! exactly once per visited node.

use std::collections::BTreeMap;

use crate::ast::*;
use crate::loc::SourceLoc;

const RED_ZONE: usize = 64 * 1024;
const STACK_CHUNK: usize = 2 * 1024 * 1024;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AssignKind {
    Blocking,
    NonBlocking,
}

impl AssignKind {
    pub fn node_kind(self) -> NodeKind {
        match self {
            AssignKind::Blocking => NodeKind::BlockingAssign,
            AssignKind::NonBlocking => NodeKind::NonBlockingAssign,
        }
    }
}

pub trait Visitor {
    fn on_node(&mut self, _kind: NodeKind) {}

    fn visit_module(&mut self, node: &Module) {
        walk_module(self, node);
    }
    fn visit_data_decl(&mut self, node: &DataDecl) {
        walk_data_decl(self, node);
    }
    fn visit_param_decl(&mut self, node: &ParamDecl) {
        walk_param_decl(self, node);
    }
    fn visit_always(&mut self, node: &AlwaysConstruct) {
        walk_always(self, node);
    }
    fn visit_continuous_assign(&mut self, node: &ContinuousAssign) {
        walk_continuous_assign(self, node);
    }
    fn visit_instance(&mut self, node: &ModuleInstance) {
        walk_instance(self, node);
    }
    fn visit_event_control(&mut self, node: &EventControlStatement) {
        walk_event_control(self, node);
    }
    fn visit_seq_block(&mut self, node: &SeqBlock) {
        walk_seq_block(self, node);
    }
    fn visit_conditional(&mut self, node: &ConditionalStatement) {
        walk_conditional(self, node);
    }
    fn visit_case(&mut self, node: &CaseStatement) {
        walk_case(self, node);
    }
    fn visit_case_item(&mut self, node: &CaseItem) {
        walk_case_item(self, node);
    }
    /// Shared hook for blocking and non-blocking assignments.
    fn visit_assignment(&mut self, node: &Assignment, _kind: AssignKind) {
        walk_assignment(self, node);
    }
    fn visit_null(&mut self, _loc: &SourceLoc) {}

    fn visit_id_ref(&mut self, _node: &IdRef) {}
    fn visit_indexed_ref(&mut self, node: &IndexedRef) {
        walk_indexed_ref(self, node);
    }
    fn visit_const(&mut self, _node: &Const) {}
    fn visit_unary(&mut self, node: &Unary) {
        walk_unary(self, node);
    }
    fn visit_binary(&mut self, node: &Binary) {
        walk_binary(self, node);
    }
    fn visit_ternary(&mut self, node: &Ternary) {
        walk_ternary(self, node);
    }
    fn visit_concat(&mut self, node: &Concat) {
        walk_concat(self, node);
    }
    fn visit_replicate(&mut self, node: &Replicate) {
        walk_replicate(self, node);
    }
    fn visit_call(&mut self, node: &Call) {
        walk_call(self, node);
    }
    fn visit_string(&mut self, _node: &StrLit) {}
}

// ---------------------------------------------------------------------------
// accept: count, then dispatch

pub fn accept_module<V: Visitor + ?Sized>(v: &mut V, node: &Module) {
    v.on_node(NodeKind::Module);
    v.visit_module(node);
}

pub fn accept_item<V: Visitor + ?Sized>(v: &mut V, item: &Item) {
    match item {
        Item::Decl(d) => accept_data_decl(v, d),
        Item::Param(p) => accept_param_decl(v, p),
        Item::Always(a) => accept_always(v, a),
        Item::Assign(a) => {
            v.on_node(NodeKind::ContinuousAssign);
            v.visit_continuous_assign(a);
        }
        Item::Instance(i) => {
            v.on_node(NodeKind::ModuleInstance);
            v.visit_instance(i);
        }
    }
}

pub fn accept_data_decl<V: Visitor + ?Sized>(v: &mut V, node: &DataDecl) {
    v.on_node(NodeKind::DataDecl);
    v.visit_data_decl(node);
}

pub fn accept_param_decl<V: Visitor + ?Sized>(v: &mut V, node: &ParamDecl) {
    v.on_node(NodeKind::ParamDecl);
    v.visit_param_decl(node);
}

pub fn accept_always<V: Visitor + ?Sized>(v: &mut V, node: &AlwaysConstruct) {
    v.on_node(NodeKind::AlwaysConstruct);
    v.visit_always(node);
}

pub fn accept_stmt<V: Visitor + ?Sized>(v: &mut V, stmt: &Stmt) {
    stacker::maybe_grow(RED_ZONE, STACK_CHUNK, || match stmt {
        Stmt::Block(b) => {
            v.on_node(NodeKind::SeqBlock);
            v.visit_seq_block(b);
        }
        Stmt::If(c) => {
            v.on_node(NodeKind::ConditionalStatement);
            v.visit_conditional(c);
        }
        Stmt::Case(c) => {
            v.on_node(NodeKind::CaseStatement);
            v.visit_case(c);
        }
        Stmt::Blocking(a) => {
            v.on_node(NodeKind::BlockingAssign);
            v.visit_assignment(a, AssignKind::Blocking);
        }
        Stmt::NonBlocking(a) => {
            v.on_node(NodeKind::NonBlockingAssign);
            v.visit_assignment(a, AssignKind::NonBlocking);
        }
        Stmt::EventControl(e) => {
            v.on_node(NodeKind::EventControlStatement);
            v.visit_event_control(e);
        }
        Stmt::Null(loc) => {
            v.on_node(NodeKind::NullStatement);
            v.visit_null(loc);
        }
    });
}

pub fn accept_case_item<V: Visitor + ?Sized>(v: &mut V, node: &CaseItem) {
    v.on_node(NodeKind::CaseItem);
    v.visit_case_item(node);
}

pub fn accept_id_ref<V: Visitor + ?Sized>(v: &mut V, node: &IdRef) {
    v.on_node(NodeKind::IdRef);
    v.visit_id_ref(node);
}

pub fn accept_expr<V: Visitor + ?Sized>(v: &mut V, expr: &Expr) {
    stacker::maybe_grow(RED_ZONE, STACK_CHUNK, || match expr {
        Expr::Id(id) => accept_id_ref(v, id),
        Expr::Indexed(ix) => {
            v.on_node(NodeKind::IndexedRef);
            v.visit_indexed_ref(ix);
        }
        Expr::Const(c) => {
            v.on_node(NodeKind::Const);
            v.visit_const(c);
        }
        Expr::Unary(u) => {
            v.on_node(NodeKind::Unary);
            v.visit_unary(u);
        }
        Expr::Binary(b) => {
            v.on_node(NodeKind::Binary);
            v.visit_binary(b);
        }
        Expr::Ternary(t) => {
            v.on_node(NodeKind::Ternary);
            v.visit_ternary(t);
        }
        Expr::Concat(c) => {
            v.on_node(NodeKind::Concat);
            v.visit_concat(c);
        }
        Expr::Replicate(r) => {
            v.on_node(NodeKind::Replicate);
            v.visit_replicate(r);
        }
        Expr::Call(c) => {
            v.on_node(NodeKind::Call);
            v.visit_call(c);
        }
        Expr::Str(s) => {
            v.on_node(NodeKind::StringLit);
            v.visit_string(s);
        }
    });
}

// ---------------------------------------------------------------------------
// walk: default descent in source order

pub fn walk_module<V: Visitor + ?Sized>(v: &mut V, node: &Module) {
    for p in &node.params {
        accept_param_decl(v, p);
    }
    for d in &node.ports {
        accept_data_decl(v, d);
    }
    for item in &node.items {
        accept_item(v, item);
    }
}

fn walk_range<V: Visitor + ?Sized>(v: &mut V, range: &Range) {
    accept_expr(v, &range.msb);
    accept_expr(v, &range.lsb);
}

pub fn walk_data_decl<V: Visitor + ?Sized>(v: &mut V, node: &DataDecl) {
    if let Some(r) = &node.range {
        walk_range(v, r);
    }
    for id in &node.ids {
        for r in &id.unpacked {
            walk_range(v, r);
        }
        if let Some(init) = &id.init {
            accept_expr(v, init);
        }
    }
}

pub fn walk_param_decl<V: Visitor + ?Sized>(v: &mut V, node: &ParamDecl) {
    if let Some(r) = &node.range {
        walk_range(v, r);
    }
    accept_expr(v, &node.value);
}

pub fn walk_always<V: Visitor + ?Sized>(v: &mut V, node: &AlwaysConstruct) {
    accept_stmt(v, &node.body);
}

pub fn walk_continuous_assign<V: Visitor + ?Sized>(v: &mut V, node: &ContinuousAssign) {
    accept_expr(v, &node.lhs);
    accept_expr(v, &node.rhs);
}

pub fn walk_instance<V: Visitor + ?Sized>(v: &mut V, node: &ModuleInstance) {
    for c in node.param_overrides.iter().chain(&node.connections) {
        if let Some(e) = &c.expr {
            accept_expr(v, e);
        }
    }
}

pub fn walk_event_control<V: Visitor + ?Sized>(v: &mut V, node: &EventControlStatement) {
    accept_stmt(v, &node.body);
}

pub fn walk_seq_block<V: Visitor + ?Sized>(v: &mut V, node: &SeqBlock) {
    for s in &node.stmts {
        accept_stmt(v, s);
    }
}

pub fn walk_conditional<V: Visitor + ?Sized>(v: &mut V, node: &ConditionalStatement) {
    accept_expr(v, &node.if_expr);
    accept_stmt(v, &node.then_stmt);
    if let Some(e) = &node.else_stmt {
        accept_stmt(v, e);
    }
}

pub fn walk_case<V: Visitor + ?Sized>(v: &mut V, node: &CaseStatement) {
    accept_expr(v, &node.cond_expr);
    for item in &node.case_items {
        accept_case_item(v, item);
    }
}

pub fn walk_case_item<V: Visitor + ?Sized>(v: &mut V, node: &CaseItem) {
    for l in &node.labels {
        accept_expr(v, l);
    }
    accept_stmt(v, &node.body);
}

pub fn walk_assignment<V: Visitor + ?Sized>(v: &mut V, node: &Assignment) {
    accept_expr(v, &node.lhs);
    accept_expr(v, &node.rhs);
}

pub fn walk_indexed_ref<V: Visitor + ?Sized>(v: &mut V, node: &IndexedRef) {
    accept_id_ref(v, &node.base);
}

pub fn walk_unary<V: Visitor + ?Sized>(v: &mut V, node: &Unary) {
    accept_expr(v, &node.operand);
}

pub fn walk_binary<V: Visitor + ?Sized>(v: &mut V, node: &Binary) {
    accept_expr(v, &node.lhs);
    accept_expr(v, &node.rhs);
}

pub fn walk_ternary<V: Visitor + ?Sized>(v: &mut V, node: &Ternary) {
    accept_expr(v, &node.cond);
    accept_expr(v, &node.then_e);
    accept_expr(v, &node.else_e);
}

pub fn walk_concat<V: Visitor + ?Sized>(v: &mut V, node: &Concat) {
    for p in &node.parts {
        accept_expr(v, p);
    }
}

pub fn walk_replicate<V: Visitor + ?Sized>(v: &mut V, node: &Replicate) {
    accept_expr(v, &node.count);
    for p in &node.parts {
        accept_expr(v, p);
    }
}

pub fn walk_call<V: Visitor + ?Sized>(v: &mut V, node: &Call) {
    for a in &node.args {
        accept_expr(v, a);
    }
}

// ---------------------------------------------------------------------------
// Counting

/// A visitor with no handlers: visits every node once and tallies kinds.
#[derive(Debug, Default, Clone)]
pub struct CountingVisitor {
    pub per_kind: BTreeMap<NodeKind, u64>,
    pub total: u64,
}

impl Visitor for CountingVisitor {
    fn on_node(&mut self, kind: NodeKind) {
        *self.per_kind.entry(kind).or_default() += 1;
        self.total += 1;
    }
}

pub fn count_nodes(module: &Module) -> u64 {
    let mut c = CountingVisitor::default();
    accept_module(&mut c, module);
    c.total
}

pub fn count_expr_nodes(expr: &Expr) -> u64 {
    let mut c = CountingVisitor::default();
    accept_expr(&mut c, expr);
    c.total
}

/// Records `(kind, line)` for every node in traversal order.
#[derive(Debug, Default)]
pub struct ShapeVisitor {
    pub nodes: Vec<(NodeKind, u32)>,
}

macro_rules! shape_hook {
    ($name:ident, $ty:ty, $kind:expr, $walk:ident) => {
        fn $name(&mut self, node: &$ty) {
            self.nodes.push(($kind, node.loc.line));
            $walk(self, node);
        }
    };
    ($name:ident, $ty:ty, $kind:expr) => {
        fn $name(&mut self, node: &$ty) {
            self.nodes.push(($kind, node.loc.line));
        }
    };
}

impl Visitor for ShapeVisitor {
    shape_hook!(visit_module, Module, NodeKind::Module, walk_module);
    shape_hook!(visit_data_decl, DataDecl, NodeKind::DataDecl, walk_data_decl);
    shape_hook!(visit_param_decl, ParamDecl, NodeKind::ParamDecl, walk_param_decl);
    shape_hook!(visit_always, AlwaysConstruct, NodeKind::AlwaysConstruct, walk_always);
    shape_hook!(
        visit_continuous_assign,
        ContinuousAssign,
        NodeKind::ContinuousAssign,
        walk_continuous_assign
    );
    shape_hook!(visit_instance, ModuleInstance, NodeKind::ModuleInstance, walk_instance);
    shape_hook!(
        visit_event_control,
        EventControlStatement,
        NodeKind::EventControlStatement,
        walk_event_control
    );
    shape_hook!(visit_seq_block, SeqBlock, NodeKind::SeqBlock, walk_seq_block);
    shape_hook!(
        visit_conditional,
        ConditionalStatement,
        NodeKind::ConditionalStatement,
        walk_conditional
    );
    shape_hook!(visit_case, CaseStatement, NodeKind::CaseStatement, walk_case);
    shape_hook!(visit_case_item, CaseItem, NodeKind::CaseItem, walk_case_item);
    shape_hook!(visit_id_ref, IdRef, NodeKind::IdRef);
    shape_hook!(visit_indexed_ref, IndexedRef, NodeKind::IndexedRef, walk_indexed_ref);
    shape_hook!(visit_const, Const, NodeKind::Const);
    shape_hook!(visit_unary, Unary, NodeKind::Unary, walk_unary);
    shape_hook!(visit_binary, Binary, NodeKind::Binary, walk_binary);
    shape_hook!(visit_ternary, Ternary, NodeKind::Ternary, walk_ternary);
    shape_hook!(visit_concat, Concat, NodeKind::Concat, walk_concat);
    shape_hook!(visit_replicate, Replicate, NodeKind::Replicate, walk_replicate);
    shape_hook!(visit_call, Call, NodeKind::Call, walk_call);
    shape_hook!(visit_string, StrLit, NodeKind::StringLit);

    fn visit_assignment(&mut self, node: &Assignment, kind: AssignKind) {
        self.nodes.push((kind.node_kind(), node.loc.line));
        walk_assignment(self, node);
    }

    fn visit_null(&mut self, loc: &SourceLoc) {
        self.nodes.push((NodeKind::NullStatement, loc.line));
    }
}

pub fn module_shape(module: &Module) -> Vec<(NodeKind, u32)> {
    let mut v = ShapeVisitor::default();
    accept_module(&mut v, module);
    v.nodes
}
