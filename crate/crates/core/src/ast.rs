//! Syntax tree for the supported Verilog subset.
//!
//! Every node carries a [`SourceLoc`]. Trees are immutable once the parser
//! returns them and are `Send + Sync`.

use std::fmt;

use serde::Serialize;

use crate::loc::SourceLoc;

/// Discriminant of every node the visitor can reach. Used for statistics.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum NodeKind {
    Module,
    DataDecl,
    ParamDecl,
    AlwaysConstruct,
    EventControlStatement,
    SeqBlock,
    ConditionalStatement,
    CaseStatement,
    CaseItem,
    BlockingAssign,
    NonBlockingAssign,
    ContinuousAssign,
    ModuleInstance,
    NullStatement,
    IdRef,
    IndexedRef,
    Const,
    Unary,
    Binary,
    Ternary,
    Concat,
    Replicate,
    Call,
    StringLit,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Module {
    pub name: String,
    pub loc: SourceLoc,
    /// Port names in header order (both ANSI and non-ANSI headers).
    pub port_names: Vec<String>,
    /// ANSI port declarations from the header.
    pub ports: Vec<DataDecl>,
    /// Parameters from the `#( ... )` header list.
    pub params: Vec<ParamDecl>,
    pub items: Vec<Item>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Item {
    Decl(DataDecl),
    Param(ParamDecl),
    Always(AlwaysConstruct),
    Assign(ContinuousAssign),
    Instance(ModuleInstance),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum StorageKind {
    Register,
    Net,
    Integer,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Direction {
    Input,
    Output,
    Inout,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Range {
    pub msb: Expr,
    pub lsb: Expr,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DataDecl {
    pub loc: SourceLoc,
    pub storage: StorageKind,
    pub direction: Option<Direction>,
    pub signed: bool,
    pub range: Option<Range>,
    pub ids: Vec<DeclItem>,
}

impl DataDecl {
    /// `reg` / `logic` storage that this module drives; `input logic`
    /// ports are driven from outside and do not count.
    pub fn is_register_decl(&self) -> bool {
        self.storage == StorageKind::Register && self.direction != Some(Direction::Input)
    }
}

/// One name introduced by a declaration.
#[derive(Debug, Clone, PartialEq)]
pub struct DeclItem {
    pub name: String,
    pub loc: SourceLoc,
    pub unpacked: Vec<Range>,
    pub init: Option<Expr>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParamDecl {
    pub loc: SourceLoc,
    pub local: bool,
    pub name: String,
    pub range: Option<Range>,
    pub value: Expr,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum AlwaysKind {
    Always,
    AlwaysComb,
    AlwaysFf,
    AlwaysLatch,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Edge {
    Posedge,
    Negedge,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SensItem {
    pub loc: SourceLoc,
    pub edge: Option<Edge>,
    pub expr: Expr,
}

/// Event control list: `@*`/`@(*)` sets `star`, otherwise `items`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SensList {
    pub star: bool,
    pub items: Vec<SensItem>,
}

impl SensList {
    /// Base names of every identifier appearing in the list.
    pub fn names(&self) -> Vec<String> {
        let mut out = Vec::new();
        for item in &self.items {
            item.expr.collect_id_names(&mut out);
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AlwaysConstruct {
    pub loc: SourceLoc,
    pub kind: AlwaysKind,
    /// Copy of the leading event control's list; empty for `always_comb`.
    pub sens_list: SensList,
    pub body: Stmt,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ContinuousAssign {
    pub loc: SourceLoc,
    pub lhs: Expr,
    pub rhs: Expr,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Connection {
    pub loc: SourceLoc,
    pub port: Option<String>,
    pub expr: Option<Expr>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModuleInstance {
    pub loc: SourceLoc,
    pub module_name: String,
    pub instance_name: String,
    pub param_overrides: Vec<Connection>,
    pub connections: Vec<Connection>,
}

/// Identity of a `begin ... end` block, unique within its module.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct BlockId(pub u32);

#[derive(Debug, Clone, PartialEq)]
pub enum Stmt {
    Block(SeqBlock),
    If(ConditionalStatement),
    Case(CaseStatement),
    Blocking(Assignment),
    NonBlocking(Assignment),
    EventControl(EventControlStatement),
    Null(SourceLoc),
}

impl Stmt {
    pub fn loc(&self) -> &SourceLoc {
        match self {
            Stmt::Block(b) => &b.loc,
            Stmt::If(c) => &c.loc,
            Stmt::Case(c) => &c.loc,
            Stmt::Blocking(a) | Stmt::NonBlocking(a) => &a.loc,
            Stmt::EventControl(e) => &e.loc,
            Stmt::Null(loc) => loc,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SeqBlock {
    pub loc: SourceLoc,
    pub id: BlockId,
    pub label: Option<String>,
    pub stmts: Vec<Stmt>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConditionalStatement {
    pub loc: SourceLoc,
    pub if_expr: Expr,
    pub then_stmt: Box<Stmt>,
    pub else_stmt: Option<Box<Stmt>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum CaseKind {
    Case,
    Casez,
    Casex,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CaseStatement {
    pub loc: SourceLoc,
    pub kind: CaseKind,
    pub cond_expr: Expr,
    pub case_items: Vec<CaseItem>,
    pub has_default: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CaseItem {
    pub loc: SourceLoc,
    /// Empty exactly when `is_default`.
    pub labels: Vec<Expr>,
    pub is_default: bool,
    pub body: Stmt,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Assignment {
    pub loc: SourceLoc,
    pub lhs: Expr,
    pub rhs: Expr,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EventControlStatement {
    pub loc: SourceLoc,
    pub sens_list: SensList,
    pub body: Box<Stmt>,
}

// ---------------------------------------------------------------------------
// Expressions

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Id(IdRef),
    Indexed(IndexedRef),
    Const(Const),
    Unary(Unary),
    Binary(Binary),
    Ternary(Ternary),
    Concat(Concat),
    Replicate(Replicate),
    Call(Call),
    Str(StrLit),
}

#[derive(Debug, Clone, PartialEq)]
pub struct IdRef {
    pub loc: SourceLoc,
    pub name: String,
    /// Produced by an undefined-macro reference.
    pub from_macro: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IndexedRef {
    pub loc: SourceLoc,
    pub base: IdRef,
    /// Source text between the outer brackets, e.g. `0` or `WIDTH-2:0`.
    /// Consecutive selects are joined with `][`.
    pub index_text: String,
}

impl IndexedRef {
    /// `base[index]`, the form used as a register key.
    pub fn full_name(&self) -> String {
        format!("{}[{}]", self.base.name, self.index_text)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Const {
    pub loc: SourceLoc,
    pub value: Number,
    /// Name of the macro the literal came from.
    pub macro_name: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum UnaryOp {
    Not,
    BitNot,
    RedAnd,
    RedOr,
    RedXor,
    RedNand,
    RedNor,
    RedXnor,
    Neg,
    Plus,
}

impl UnaryOp {
    pub fn as_str(self) -> &'static str {
        match self {
            UnaryOp::Not => "!",
            UnaryOp::BitNot => "~",
            UnaryOp::RedAnd => "&",
            UnaryOp::RedOr => "|",
            UnaryOp::RedXor => "^",
            UnaryOp::RedNand => "~&",
            UnaryOp::RedNor => "~|",
            UnaryOp::RedXnor => "~^",
            UnaryOp::Neg => "-",
            UnaryOp::Plus => "+",
        }
    }

    pub fn from_token(s: &str) -> Option<Self> {
        Some(match s {
            "!" => UnaryOp::Not,
            "~" => UnaryOp::BitNot,
            "&" => UnaryOp::RedAnd,
            "|" => UnaryOp::RedOr,
            "^" => UnaryOp::RedXor,
            "~&" => UnaryOp::RedNand,
            "~|" => UnaryOp::RedNor,
            "~^" | "^~" => UnaryOp::RedXnor,
            "-" => UnaryOp::Neg,
            "+" => UnaryOp::Plus,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum BinaryOp {
    LogOr,
    LogAnd,
    BitOr,
    BitXor,
    BitXnor,
    BitAnd,
    Eq,
    Ne,
    CaseEq,
    CaseNe,
    Lt,
    Le,
    Gt,
    Ge,
    Shl,
    Shr,
    AShl,
    AShr,
    Add,
    Sub,
    Mul,
    Div,
    Mod,
    Pow,
}

impl BinaryOp {
    pub fn as_str(self) -> &'static str {
        match self {
            BinaryOp::LogOr => "||",
            BinaryOp::LogAnd => "&&",
            BinaryOp::BitOr => "|",
            BinaryOp::BitXor => "^",
            BinaryOp::BitXnor => "~^",
            BinaryOp::BitAnd => "&",
            BinaryOp::Eq => "==",
            BinaryOp::Ne => "!=",
            BinaryOp::CaseEq => "===",
            BinaryOp::CaseNe => "!==",
            BinaryOp::Lt => "<",
            BinaryOp::Le => "<=",
            BinaryOp::Gt => ">",
            BinaryOp::Ge => ">=",
            BinaryOp::Shl => "<<",
            BinaryOp::Shr => ">>",
            BinaryOp::AShl => "<<<",
            BinaryOp::AShr => ">>>",
            BinaryOp::Add => "+",
            BinaryOp::Sub => "-",
            BinaryOp::Mul => "*",
            BinaryOp::Div => "/",
            BinaryOp::Mod => "%",
            BinaryOp::Pow => "**",
        }
    }

    pub fn from_token(s: &str) -> Option<Self> {
        Some(match s {
            "||" => BinaryOp::LogOr,
            "&&" => BinaryOp::LogAnd,
            "|" => BinaryOp::BitOr,
            "^" => BinaryOp::BitXor,
            "~^" | "^~" => BinaryOp::BitXnor,
            "&" => BinaryOp::BitAnd,
            "==" => BinaryOp::Eq,
            "!=" => BinaryOp::Ne,
            "===" => BinaryOp::CaseEq,
            "!==" => BinaryOp::CaseNe,
            "<" => BinaryOp::Lt,
            "<=" => BinaryOp::Le,
            ">" => BinaryOp::Gt,
            ">=" => BinaryOp::Ge,
            "<<" => BinaryOp::Shl,
            ">>" => BinaryOp::Shr,
            "<<<" => BinaryOp::AShl,
            ">>>" => BinaryOp::AShr,
            "+" => BinaryOp::Add,
            "-" => BinaryOp::Sub,
            "*" => BinaryOp::Mul,
            "/" => BinaryOp::Div,
            "%" => BinaryOp::Mod,
            "**" => BinaryOp::Pow,
            _ => return None,
        })
    }

    /// Binding strength; higher binds tighter. The ternary sits below 1.
    pub fn precedence(self) -> u8 {
        match self {
            BinaryOp::LogOr => 1,
            BinaryOp::LogAnd => 2,
            BinaryOp::BitOr => 3,
            BinaryOp::BitXor | BinaryOp::BitXnor => 4,
            BinaryOp::BitAnd => 5,
            BinaryOp::Eq | BinaryOp::Ne | BinaryOp::CaseEq | BinaryOp::CaseNe => 6,
            BinaryOp::Lt | BinaryOp::Le | BinaryOp::Gt | BinaryOp::Ge => 7,
            BinaryOp::Shl | BinaryOp::Shr | BinaryOp::AShl | BinaryOp::AShr => 8,
            BinaryOp::Add | BinaryOp::Sub => 9,
            BinaryOp::Mul | BinaryOp::Div | BinaryOp::Mod => 10,
            BinaryOp::Pow => 11,
        }
    }

    pub fn is_equality(self) -> bool {
        matches!(self, BinaryOp::Eq | BinaryOp::CaseEq)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Unary {
    pub loc: SourceLoc,
    pub op: UnaryOp,
    pub operand: Box<Expr>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Binary {
    pub loc: SourceLoc,
    pub op: BinaryOp,
    pub lhs: Box<Expr>,
    pub rhs: Box<Expr>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Ternary {
    pub loc: SourceLoc,
    pub cond: Box<Expr>,
    pub then_e: Box<Expr>,
    pub else_e: Box<Expr>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Concat {
    pub loc: SourceLoc,
    pub parts: Vec<Expr>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Replicate {
    pub loc: SourceLoc,
    pub count: Box<Expr>,
    pub parts: Vec<Expr>,
}

/// Function-call shaped expression (`$clog2(x)`, `f(a, b)`). Not interpreted.
#[derive(Debug, Clone, PartialEq)]
pub struct Call {
    pub loc: SourceLoc,
    pub name: String,
    pub args: Vec<Expr>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StrLit {
    pub loc: SourceLoc,
    pub text: String,
}

impl Expr {
    pub fn loc(&self) -> &SourceLoc {
        match self {
            Expr::Id(e) => &e.loc,
            Expr::Indexed(e) => &e.loc,
            Expr::Const(e) => &e.loc,
            Expr::Unary(e) => &e.loc,
            Expr::Binary(e) => &e.loc,
            Expr::Ternary(e) => &e.loc,
            Expr::Concat(e) => &e.loc,
            Expr::Replicate(e) => &e.loc,
            Expr::Call(e) => &e.loc,
            Expr::Str(e) => &e.loc,
        }
    }

    /// The identifier an lvalue or simple reference names: `x` for `x`,
    /// `x[3]` and `x[7:0]`.
    pub fn base_name(&self) -> Option<&str> {
        match self {
            Expr::Id(id) => Some(&id.name),
            Expr::Indexed(ix) => Some(&ix.base.name),
            _ => None,
        }
    }

    pub fn as_id(&self) -> Option<&IdRef> {
        match self {
            Expr::Id(id) => Some(id),
            _ => None,
        }
    }

    /// Appends the base name of every identifier reference in the tree.
    pub fn collect_id_names(&self, out: &mut Vec<String>) {
        self.for_each_id(&mut |id| out.push(id.name.clone()));
    }

    /// Calls `f` for every `IdRef` (including bases of indexed references) in
    /// syntactic order.
    pub fn for_each_id(&self, f: &mut dyn FnMut(&IdRef)) {
        match self {
            Expr::Id(id) => f(id),
            Expr::Indexed(ix) => f(&ix.base),
            Expr::Const(_) | Expr::Str(_) => {}
            Expr::Unary(u) => u.operand.for_each_id(f),
            Expr::Binary(b) => {
                b.lhs.for_each_id(f);
                b.rhs.for_each_id(f);
            }
            Expr::Ternary(t) => {
                t.cond.for_each_id(f);
                t.then_e.for_each_id(f);
                t.else_e.for_each_id(f);
            }
            Expr::Concat(c) => c.parts.iter().for_each(|p| p.for_each_id(f)),
            Expr::Replicate(r) => {
                r.count.for_each_id(f);
                r.parts.iter().for_each(|p| p.for_each_id(f));
            }
            Expr::Call(c) => c.args.iter().for_each(|a| a.for_each_id(f)),
        }
    }

    fn precedence(&self) -> u8 {
        match self {
            Expr::Ternary(_) => 0,
            Expr::Binary(b) => b.op.precedence(),
            _ => 12,
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn child(f: &mut fmt::Formatter<'_>, e: &Expr, min: u8) -> fmt::Result {
            if e.precedence() < min {
                write!(f, "({e})")
            } else {
                write!(f, "{e}")
            }
        }
        fn list(f: &mut fmt::Formatter<'_>, parts: &[Expr]) -> fmt::Result {
            for (i, p) in parts.iter().enumerate() {
                if i > 0 {
                    f.write_str(", ")?;
                }
                write!(f, "{p}")?;
            }
            Ok(())
        }
        match self {
            Expr::Id(id) => f.write_str(&id.name),
            Expr::Indexed(ix) => write!(f, "{}[{}]", ix.base.name, ix.index_text),
            Expr::Const(c) => match &c.macro_name {
                Some(m) => write!(f, "`{m}"),
                None => f.write_str(&c.value.raw),
            },
            Expr::Unary(u) => {
                f.write_str(u.op.as_str())?;
                child(f, &u.operand, 12)
            }
            Expr::Binary(b) => {
                let p = b.op.precedence();
                child(f, &b.lhs, p)?;
                write!(f, " {} ", b.op.as_str())?;
                child(f, &b.rhs, p + 1)
            }
            Expr::Ternary(t) => {
                child(f, &t.cond, 1)?;
                f.write_str(" ? ")?;
                child(f, &t.then_e, 1)?;
                f.write_str(" : ")?;
                write!(f, "{}", t.else_e)
            }
            Expr::Concat(c) => {
                f.write_str("{")?;
                list(f, &c.parts)?;
                f.write_str("}")
            }
            Expr::Replicate(r) => {
                write!(f, "{{{}{{", r.count)?;
                list(f, &r.parts)?;
                f.write_str("}}")
            }
            Expr::Call(c) => {
                write!(f, "{}(", c.name)?;
                list(f, &c.args)?;
                f.write_str(")")
            }
            Expr::Str(s) => f.write_str(&s.text),
        }
    }
}

// ---------------------------------------------------------------------------
// Numeric literals

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Base {
    Binary,
    Octal,
    Decimal,
    Hex,
}

impl Base {
    fn radix(self) -> u32 {
        match self {
            Base::Binary => 2,
            Base::Octal => 8,
            Base::Decimal => 10,
            Base::Hex => 16,
        }
    }

    fn bits_per_digit(self) -> Option<u32> {
        match self {
            Base::Binary => Some(1),
            Base::Octal => Some(3),
            Base::Hex => Some(4),
            Base::Decimal => None,
        }
    }
}

/// A normalized numeric literal.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Number {
    /// Literal as written, without internal whitespace.
    pub raw: String,
    pub width: Option<u32>,
    pub base: Base,
    pub signed: bool,
    /// Digits after the base marker, underscores removed, lowercase.
    pub digits: String,
    /// True if any digit is `x`, `z` or `?`.
    pub has_xz: bool,
    /// Unsigned value, when every digit is known and it fits in 128 bits.
    pub value: Option<u128>,
}

impl Number {
    pub fn parse(raw: &str) -> Number {
        let raw_clean: String = raw.chars().filter(|c| !c.is_whitespace()).collect();
        let (width, rest) = match raw_clean.find('\'') {
            Some(pos) => {
                let w = &raw_clean[..pos];
                let w = w.replace('_', "");
                (w.parse::<u32>().ok().filter(|w| *w > 0), Some(&raw_clean[pos + 1..]))
            }
            None => (None, None),
        };
        let Some(rest) = rest else {
            let digits = raw_clean.replace('_', "");
            let value = digits.parse::<u128>().ok();
            return Number {
                raw: raw_clean,
                width: None,
                base: Base::Decimal,
                signed: true,
                digits,
                has_xz: false,
                value,
            };
        };
        let mut chars = rest.chars().peekable();
        let mut signed = false;
        if matches!(chars.peek(), Some('s' | 'S')) {
            signed = true;
            chars.next();
        }
        let base = match chars.next().map(|c| c.to_ascii_lowercase()) {
            Some('b') => Base::Binary,
            Some('o') => Base::Octal,
            Some('h') => Base::Hex,
            Some('d') => Base::Decimal,
            // Fill literals '0 / '1 / 'x / 'z.
            Some(c) => {
                let has_xz = matches!(c, 'x' | 'z');
                let value = match c {
                    '0' => Some(0),
                    _ => None,
                };
                return Number {
                    raw: raw_clean.clone(),
                    width: None,
                    base: Base::Binary,
                    signed: false,
                    digits: c.to_string(),
                    has_xz,
                    value,
                };
            }
            None => Base::Decimal,
        };
        let digits: String = chars.filter(|c| *c != '_').map(|c| c.to_ascii_lowercase()).collect();
        let has_xz = digits.chars().any(|c| matches!(c, 'x' | 'z' | '?'));
        let value = if has_xz || digits.is_empty() {
            None
        } else {
            u128::from_str_radix(&digits, base.radix()).ok()
        };
        let value = match (value, width) {
            (Some(v), Some(w)) if w < 128 => Some(v & ((1u128 << w) - 1)),
            (v, _) => v,
        };
        Number {
            raw: raw_clean,
            width,
            base,
            signed,
            digits,
            has_xz,
            value,
        }
    }

    /// Usable as an FSM state label: known value, no x/z digits.
    pub fn is_constant(&self) -> bool {
        !self.has_xz && self.value.is_some()
    }

    /// Value/care-mask pair for `casez`/`casex` matching over `width` bits.
    /// `?` and `z` are wildcards in both forms, `x` only in `casex`.
    /// Returns `None` for decimal literals with unknown digits or values that
    /// do not fit.
    pub fn wildcard_pattern(&self, width: u32, casex: bool) -> Option<(u128, u128)> {
        if width == 0 || width > 127 {
            return None;
        }
        let full = (1u128 << width) - 1;
        if let Some(v) = self.value {
            return Some((v & full, full));
        }
        let bpd = self.base.bits_per_digit()?;
        let mut value: u128 = 0;
        let mut care: u128 = 0;
        for c in self.digits.chars() {
            let wild = c == '?' || c == 'z' || (casex && c == 'x');
            let (dv, dc) = if wild {
                (0, 0)
            } else if c == 'x' {
                return None;
            } else {
                (c.to_digit(16)? as u128, (1u128 << bpd) - 1)
            };
            value = value.checked_shl(bpd)? | dv;
            care = care.checked_shl(bpd)? | dc;
        }
        Some((value & full, care & full))
    }
}
