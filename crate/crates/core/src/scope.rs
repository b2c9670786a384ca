//! Per-module symbol table: ports, data declarations and parameters.

use std::collections::HashMap;

use crate::ast::*;
use crate::loc::{Diagnostic, SourceLoc};

#[derive(Debug, Clone, PartialEq)]
pub struct DeclaredId {
    pub name: String,
    pub loc: SourceLoc,
    pub storage: StorageKind,
    pub direction: Option<Direction>,
    /// True for register and integer storage.
    pub is_variable: bool,
    pub width_bits: Option<u32>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParamInfo {
    pub name: String,
    pub loc: SourceLoc,
    pub local: bool,
    pub value: Option<i128>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Scope {
    ids: Vec<DeclaredId>,
    index: HashMap<String, usize>,
    params: HashMap<String, ParamInfo>,
    pub diagnostics: Vec<Diagnostic>,
}

impl Scope {
    pub fn get(&self, name: &str) -> Option<&DeclaredId> {
        self.index.get(name).map(|&i| &self.ids[i])
    }

    pub fn param(&self, name: &str) -> Option<&ParamInfo> {
        self.params.get(name)
    }

    /// Declared identifiers in declaration order.
    pub fn ids(&self) -> &[DeclaredId] {
        &self.ids
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn width_of(&self, name: &str) -> Option<u32> {
        self.get(name).and_then(|d| d.width_bits)
    }

    fn insert(&mut self, decl: DeclaredId, has_range: bool) {
        let Some(&i) = self.index.get(&decl.name) else {
            self.index.insert(decl.name.clone(), self.ids.len());
            self.ids.push(decl);
            return;
        };
        let prev = &mut self.ids[i];
        // `output q; reg [1:0] q;` describes one object in two statements.
        let one_is_port_only = prev.direction.is_some() != decl.direction.is_some();
        if one_is_port_only {
            if decl.storage != StorageKind::Net {
                prev.storage = decl.storage;
                prev.is_variable = decl.is_variable;
            }
            if has_range || prev.width_bits.is_none() {
                prev.width_bits = decl.width_bits.or(prev.width_bits);
            }
            prev.direction = prev.direction.or(decl.direction);
            return;
        }
        self.diagnostics.push(Diagnostic::new(
            decl.loc.clone(),
            format!(
                "duplicate declaration of `{}` (first declared at line {})",
                decl.name, prev.loc.line
            ),
        ));
    }
}

/// Collects every port, declaration and parameter of `module`.
pub fn build_scope(module: &Module) -> Scope {
    let mut scope = Scope::default();
    for p in &module.params {
        add_param(&mut scope, p);
    }
    for d in &module.ports {
        add_decl(&mut scope, d);
    }
    for item in &module.items {
        match item {
            Item::Decl(d) => add_decl(&mut scope, d),
            Item::Param(p) => add_param(&mut scope, p),
            _ => {}
        }
    }
    scope
}

fn add_param(scope: &mut Scope, p: &ParamDecl) {
    let value = eval_const(&p.value, scope);
    if scope.params.contains_key(&p.name) {
        scope.diagnostics.push(Diagnostic::new(
            p.loc.clone(),
            format!("duplicate parameter `{}`", p.name),
        ));
        return;
    }
    scope.params.insert(
        p.name.clone(),
        ParamInfo {
            name: p.name.clone(),
            loc: p.loc.clone(),
            local: p.local,
            value,
        },
    );
}

fn add_decl(scope: &mut Scope, d: &DataDecl) {
    let width = match (&d.range, d.storage) {
        (Some(r), _) => range_width(r, scope),
        (None, StorageKind::Integer) => Some(32),
        (None, _) => Some(1),
    };
    for id in &d.ids {
        scope.insert(
            DeclaredId {
                name: id.name.clone(),
                loc: id.loc.clone(),
                storage: d.storage,
                direction: d.direction,
                is_variable: matches!(d.storage, StorageKind::Register | StorageKind::Integer),
                width_bits: width,
            },
            d.range.is_some(),
        );
    }
}

fn range_width(r: &Range, scope: &Scope) -> Option<u32> {
    let msb = eval_const(&r.msb, scope)?;
    let lsb = eval_const(&r.lsb, scope)?;
    u32::try_from(msb.abs_diff(lsb).checked_add(1)?).ok()
}

/// Evaluates a constant expression over literals and known parameters.
pub fn eval_const(expr: &Expr, scope: &Scope) -> Option<i128> {
    match expr {
        Expr::Const(c) => c.value.value.and_then(|v| i128::try_from(v).ok()),
        Expr::Id(id) => scope.params.get(&id.name)?.value,
        Expr::Unary(u) => {
            let v = eval_const(&u.operand, scope)?;
            match u.op {
                UnaryOp::Neg => v.checked_neg(),
                UnaryOp::Plus => Some(v),
                UnaryOp::Not => Some((v == 0) as i128),
                _ => None,
            }
        }
        Expr::Binary(b) => {
            let l = eval_const(&b.lhs, scope)?;
            let r = eval_const(&b.rhs, scope)?;
            match b.op {
                BinaryOp::Add => l.checked_add(r),
                BinaryOp::Sub => l.checked_sub(r),
                BinaryOp::Mul => l.checked_mul(r),
                BinaryOp::Div => l.checked_div(r),
                BinaryOp::Mod => l.checked_rem(r),
                BinaryOp::Pow => l.checked_pow(u32::try_from(r).ok()?),
                BinaryOp::Shl => l.checked_shl(u32::try_from(r).ok()?),
                BinaryOp::Shr => l.checked_shr(u32::try_from(r).ok()?),
                _ => None,
            }
        }
        Expr::Ternary(t) => {
            if eval_const(&t.cond, scope)? != 0 {
                eval_const(&t.then_e, scope)
            } else {
                eval_const(&t.else_e, scope)
            }
        }
        Expr::Call(c) if c.name == "$clog2" && c.args.len() == 1 => {
            let v = eval_const(&c.args[0], scope)?;
            if v <= 1 {
                return Some(0);
            }
            Some(128 - i128::from((v - 1).leading_zeros()))
        }
        _ => None,
    }
}
