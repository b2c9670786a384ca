//! Recursive-descent parser for the supported Verilog subset.
//!
//! The first construct outside the subset aborts the file: the outcome is
//! marked `skipped`, carries no modules, and names the construct.

use crate::ast::*;
use crate::lexer::{Token, TokenKind};
use crate::loc::{Diagnostic, SourceLoc};

const MAX_DEPTH: usize = 512;
const RED_ZONE: usize = 128 * 1024;
const STACK_CHUNK: usize = 4 * 1024 * 1024;

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ParseOutcome {
    pub modules: Vec<Module>,
    pub diagnostics: Vec<Diagnostic>,
    pub skipped: bool,
}

/// Parses a preprocessed token stream into modules.
pub fn parse(tokens: &[Token]) -> ParseOutcome {
    let mut p = Parser {
        toks: tokens,
        pos: 0,
        depth: 0,
        next_block: 0,
    };
    let mut modules = Vec::new();
    while !p.at_end() {
        match p.module() {
            Ok(m) => modules.push(m),
            Err(d) => {
                return ParseOutcome {
                    modules: Vec::new(),
                    diagnostics: vec![d],
                    skipped: true,
                };
            }
        }
    }
    ParseOutcome {
        modules,
        diagnostics: Vec::new(),
        skipped: false,
    }
}

type PResult<T> = Result<T, Diagnostic>;

struct Parser<'a> {
    toks: &'a [Token],
    pos: usize,
    depth: usize,
    next_block: u32,
}

impl<'a> Parser<'a> {
    fn at_end(&self) -> bool {
        self.pos >= self.toks.len()
    }

    fn peek(&self) -> Option<&'a Token> {
        self.toks.get(self.pos)
    }

    fn peek_at(&self, n: usize) -> Option<&'a Token> {
        self.toks.get(self.pos + n)
    }

    fn peek_lex(&self) -> &'a str {
        self.peek().map_or("", |t| t.lexeme.as_str())
    }

    fn is_kw(&self, kw: &str) -> bool {
        self.peek().is_some_and(|t| t.is(TokenKind::Keyword, kw))
    }

    fn is_sym(&self, s: &str) -> bool {
        self.peek()
            .is_some_and(|t| matches!(t.kind, TokenKind::Operator | TokenKind::Punctuation) && t.lexeme == s)
    }

    fn bump(&mut self) -> Option<&'a Token> {
        let t = self.toks.get(self.pos);
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn eat_sym(&mut self, s: &str) -> bool {
        if self.is_sym(s) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn eat_kw(&mut self, kw: &str) -> bool {
        if self.is_kw(kw) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    /// Location of the current token, or of the last one at end of input.
    fn here(&self) -> SourceLoc {
        self.peek()
            .or_else(|| self.toks.last())
            .map(|t| t.loc.clone())
            .unwrap_or_else(|| SourceLoc::new("<empty>".into(), 1, 1))
    }

    fn error(&self, msg: impl Into<String>) -> Diagnostic {
        Diagnostic::new(self.here(), msg)
    }

    fn unexpected(&self, what: &str) -> Diagnostic {
        match self.peek() {
            Some(t) => self.error(format!("expected {what}, found `{}`", t.lexeme)),
            None => self.error(format!("expected {what}, found end of input")),
        }
    }

    fn unsupported(&self) -> Diagnostic {
        match self.peek() {
            Some(t) => self.error(format!("unsupported construct `{}`", t.lexeme)),
            None => self.error("unexpected end of input"),
        }
    }

    fn expect_sym(&mut self, s: &str) -> PResult<&'a Token> {
        if self.is_sym(s) {
            Ok(self.bump().expect("checked"))
        } else {
            Err(self.unexpected(&format!("`{s}`")))
        }
    }

    fn ident(&mut self) -> PResult<&'a Token> {
        match self.peek() {
            Some(t) if t.kind == TokenKind::Identifier && !t.lexeme.starts_with('$') => {
                self.pos += 1;
                Ok(t)
            }
            _ => Err(self.unexpected("identifier")),
        }
    }

    fn enter(&mut self) -> PResult<()> {
        self.depth += 1;
        if self.depth > MAX_DEPTH {
            return Err(self.error("nesting too deep"));
        }
        Ok(())
    }

    fn leave(&mut self) {
        self.depth -= 1;
    }

    // -----------------------------------------------------------------------
    // Modules

    fn module(&mut self) -> PResult<Module> {
        if !self.is_kw("module") {
            return Err(self.unsupported());
        }
        let start = self.bump().expect("checked").loc.clone();
        self.next_block = 0;
        let name = self.ident()?.lexeme.clone();
        let mut module = Module {
            name,
            loc: start,
            port_names: Vec::new(),
            ports: Vec::new(),
            params: Vec::new(),
            items: Vec::new(),
        };
        if self.eat_sym("#") {
            self.expect_sym("(")?;
            if !self.is_sym(")") {
                loop {
                    self.eat_kw("parameter");
                    self.eat_kw("localparam");
                    module.params.extend(self.param_assignments(false, true)?);
                    if !self.eat_sym(",") {
                        break;
                    }
                }
            }
            self.expect_sym(")")?;
        }
        if self.eat_sym("(") {
            if !self.is_sym(")") {
                if self.is_direction() {
                    self.ansi_ports(&mut module)?;
                } else {
                    loop {
                        module.port_names.push(self.ident()?.lexeme.clone());
                        if !self.eat_sym(",") {
                            break;
                        }
                    }
                }
            }
            self.expect_sym(")")?;
        }
        self.expect_sym(";")?;
        loop {
            if self.at_end() {
                return Err(self.error("missing `endmodule`"));
            }
            if self.eat_kw("endmodule") {
                if self.eat_sym(":") {
                    self.ident()?;
                }
                break;
            }
            self.module_item(&mut module.items)?;
        }
        Ok(module)
    }

    fn is_direction(&self) -> bool {
        self.is_kw("input") || self.is_kw("output") || self.is_kw("inout")
    }

    fn direction(&mut self) -> Option<Direction> {
        let d = match self.peek_lex() {
            "input" => Direction::Input,
            "output" => Direction::Output,
            "inout" => Direction::Inout,
            _ => return None,
        };
        if self.peek().is_some_and(|t| t.kind == TokenKind::Keyword) {
            self.pos += 1;
            Some(d)
        } else {
            None
        }
    }

    fn storage(&mut self) -> Option<StorageKind> {
        let s = match self.peek_lex() {
            "reg" | "logic" => StorageKind::Register,
            "wire" => StorageKind::Net,
            "integer" => StorageKind::Integer,
            _ => return None,
        };
        if self.peek().is_some_and(|t| t.kind == TokenKind::Keyword) {
            self.pos += 1;
            Some(s)
        } else {
            None
        }
    }

    fn ansi_ports(&mut self, module: &mut Module) -> PResult<()> {
        loop {
            let loc = self.here();
            if let Some(dir) = self.direction() {
                let storage = self.storage().unwrap_or(StorageKind::Net);
                let signed = self.eat_kw("signed");
                let range = self.opt_range()?;
                let item = self.decl_item(false)?;
                module.port_names.push(item.name.clone());
                module.ports.push(DataDecl {
                    loc,
                    storage,
                    direction: Some(dir),
                    signed,
                    range,
                    ids: vec![item],
                });
            } else if self.is_direction_less_port() {
                let item = self.decl_item(false)?;
                module.port_names.push(item.name.clone());
                match module.ports.last_mut() {
                    Some(prev) => prev.ids.push(item),
                    None => return Err(self.unexpected("port direction")),
                }
            } else {
                return Err(self.unsupported());
            }
            if !self.eat_sym(",") {
                return Ok(());
            }
        }
    }

    fn is_direction_less_port(&self) -> bool {
        self.peek()
            .is_some_and(|t| t.kind == TokenKind::Identifier && !t.lexeme.starts_with('$'))
    }

    fn opt_range(&mut self) -> PResult<Option<Range>> {
        if !self.is_sym("[") {
            return Ok(None);
        }
        self.bump();
        let msb = self.expr()?;
        self.expect_sym(":")?;
        let lsb = self.expr()?;
        self.expect_sym("]")?;
        Ok(Some(Range { msb, lsb }))
    }

    fn decl_item(&mut self, allow_init: bool) -> PResult<DeclItem> {
        let tok = self.ident()?;
        let mut unpacked = Vec::new();
        while let Some(r) = self.opt_range()? {
            unpacked.push(r);
        }
        let init = if allow_init && self.eat_sym("=") {
            Some(self.expr()?)
        } else {
            None
        };
        Ok(DeclItem {
            name: tok.lexeme.clone(),
            loc: tok.loc.clone(),
            unpacked,
            init,
        })
    }

    fn param_assignments(&mut self, local: bool, in_header: bool) -> PResult<Vec<ParamDecl>> {
        self.eat_kw("integer");
        self.eat_kw("signed");
        let range = self.opt_range()?;
        let mut out = Vec::new();
        loop {
            let tok = self.ident()?;
            self.expect_sym("=")?;
            let value = self.expr()?;
            out.push(ParamDecl {
                loc: tok.loc.clone(),
                local,
                name: tok.lexeme.clone(),
                range: range.clone(),
                value,
            });
            // In a header list a comma may start a new `parameter` clause.
            if in_header {
                let next_is_name = self.is_sym(",") && self.peek_at(1).is_some_and(|t| t.kind == TokenKind::Identifier);
                if next_is_name {
                    self.bump();
                    continue;
                }
                return Ok(out);
            }
            if !self.eat_sym(",") {
                return Ok(out);
            }
        }
    }

    fn module_item(&mut self, items: &mut Vec<Item>) -> PResult<()> {
        let Some(tok) = self.peek() else {
            return Err(self.error("unexpected end of input"));
        };
        let loc = tok.loc.clone();
        match (tok.kind, tok.lexeme.as_str()) {
            (TokenKind::Punctuation, ";") => {
                self.bump();
            }
            (TokenKind::Keyword, "input" | "output" | "inout") => {
                let dir = self.direction();
                let storage = self.storage().unwrap_or(StorageKind::Net);
                let signed = self.eat_kw("signed");
                let range = self.opt_range()?;
                let ids = self.decl_list(false)?;
                items.push(Item::Decl(DataDecl {
                    loc,
                    storage,
                    direction: dir,
                    signed,
                    range,
                    ids,
                }));
            }
            (TokenKind::Keyword, "reg" | "wire" | "logic" | "integer") => {
                let storage = self.storage().expect("matched storage keyword");
                let signed = self.eat_kw("signed");
                let range = self.opt_range()?;
                let ids = self.decl_list(true)?;
                items.push(Item::Decl(DataDecl {
                    loc,
                    storage,
                    direction: None,
                    signed,
                    range,
                    ids,
                }));
            }
            (TokenKind::Keyword, "parameter" | "localparam") => {
                let local = tok.lexeme == "localparam";
                self.bump();
                for p in self.param_assignments(local, false)? {
                    items.push(Item::Param(p));
                }
                self.expect_sym(";")?;
            }
            (TokenKind::Keyword, "always" | "always_comb" | "always_ff" | "always_latch") => {
                let kind = match tok.lexeme.as_str() {
                    "always" => AlwaysKind::Always,
                    "always_comb" => AlwaysKind::AlwaysComb,
                    "always_ff" => AlwaysKind::AlwaysFf,
                    _ => AlwaysKind::AlwaysLatch,
                };
                self.bump();
                let body = self.stmt()?;
                let sens_list = match &body {
                    Stmt::EventControl(ec) => ec.sens_list.clone(),
                    _ => SensList::default(),
                };
                items.push(Item::Always(AlwaysConstruct {
                    loc,
                    kind,
                    sens_list,
                    body,
                }));
            }
            (TokenKind::Keyword, "assign") => {
                self.bump();
                loop {
                    let aloc = self.here();
                    let lhs = self.lvalue()?;
                    self.expect_sym("=")?;
                    let rhs = self.expr()?;
                    items.push(Item::Assign(ContinuousAssign { loc: aloc, lhs, rhs }));
                    if !self.eat_sym(",") {
                        break;
                    }
                }
                self.expect_sym(";")?;
            }
            (TokenKind::Identifier, _) if !tok.lexeme.starts_with('$') => {
                self.instance(items)?;
            }
            _ => return Err(self.unsupported()),
        }
        Ok(())
    }

    fn decl_list(&mut self, allow_init: bool) -> PResult<Vec<DeclItem>> {
        let mut ids = vec![self.decl_item(allow_init)?];
        while self.eat_sym(",") {
            ids.push(self.decl_item(allow_init)?);
        }
        self.expect_sym(";")?;
        Ok(ids)
    }

    fn instance(&mut self, items: &mut Vec<Item>) -> PResult<()> {
        let module_tok = self.ident()?;
        let mut param_overrides = Vec::new();
        if self.eat_sym("#") {
            self.expect_sym("(")?;
            param_overrides = self.connections()?;
        } else if !self.peek_at(1).is_some_and(|t| t.is(TokenKind::Punctuation, "(")) {
            // `type_name x;` and friends: user-defined types are out of scope.
            self.pos -= 1;
            return Err(self.unsupported());
        }
        loop {
            let inst = self.ident()?;
            self.expect_sym("(")?;
            let connections = self.connections()?;
            items.push(Item::Instance(ModuleInstance {
                loc: module_tok.loc.clone(),
                module_name: module_tok.lexeme.clone(),
                instance_name: inst.lexeme.clone(),
                param_overrides: param_overrides.clone(),
                connections,
            }));
            if !self.eat_sym(",") {
                break;
            }
        }
        self.expect_sym(";")?;
        Ok(())
    }

    /// Parses a connection list; the opening `(` has been consumed.
    fn connections(&mut self) -> PResult<Vec<Connection>> {
        let mut out = Vec::new();
        if self.eat_sym(")") {
            return Ok(out);
        }
        loop {
            let loc = self.here();
            if self.eat_sym(".") {
                let port = self.ident()?.lexeme.clone();
                self.expect_sym("(")?;
                let expr = if self.is_sym(")") { None } else { Some(self.expr()?) };
                self.expect_sym(")")?;
                out.push(Connection {
                    loc,
                    port: Some(port),
                    expr,
                });
            } else {
                let expr = self.expr()?;
                out.push(Connection {
                    loc,
                    port: None,
                    expr: Some(expr),
                });
            }
            if !self.eat_sym(",") {
                break;
            }
        }
        self.expect_sym(")")?;
        Ok(out)
    }

    // -----------------------------------------------------------------------
    // Statements

    fn stmt(&mut self) -> PResult<Stmt> {
        self.enter()?;
        let r = stacker::maybe_grow(RED_ZONE, STACK_CHUNK, || self.stmt_inner());
        self.leave();
        r
    }

    fn stmt_inner(&mut self) -> PResult<Stmt> {
        let Some(tok) = self.peek() else {
            return Err(self.error("unexpected end of input"));
        };
        let loc = tok.loc.clone();
        match (tok.kind, tok.lexeme.as_str()) {
            (TokenKind::Punctuation, ";") => {
                self.bump();
                Ok(Stmt::Null(loc))
            }
            (TokenKind::Keyword, "begin") => {
                self.bump();
                let id = BlockId(self.next_block);
                self.next_block += 1;
                let mut label = None;
                if self.eat_sym(":") {
                    label = Some(self.ident()?.lexeme.clone());
                }
                let mut stmts = Vec::new();
                while !self.is_kw("end") {
                    if self.at_end() {
                        return Err(self.error("missing `end`"));
                    }
                    stmts.push(self.stmt()?);
                }
                self.bump();
                if self.eat_sym(":") {
                    self.ident()?;
                }
                Ok(Stmt::Block(SeqBlock { loc, id, label, stmts }))
            }
            (TokenKind::Keyword, "if") => {
                self.bump();
                self.expect_sym("(")?;
                let if_expr = self.expr()?;
                self.expect_sym(")")?;
                let then_stmt = Box::new(self.stmt()?);
                let else_stmt = if self.eat_kw("else") {
                    Some(Box::new(self.stmt()?))
                } else {
                    None
                };
                Ok(Stmt::If(ConditionalStatement {
                    loc,
                    if_expr,
                    then_stmt,
                    else_stmt,
                }))
            }
            (TokenKind::Keyword, "case" | "casez" | "casex") => {
                let kind = match tok.lexeme.as_str() {
                    "case" => CaseKind::Case,
                    "casez" => CaseKind::Casez,
                    _ => CaseKind::Casex,
                };
                self.bump();
                self.expect_sym("(")?;
                let cond_expr = self.expr()?;
                self.expect_sym(")")?;
                let mut case_items = Vec::new();
                let mut has_default = false;
                while !self.is_kw("endcase") {
                    if self.at_end() {
                        return Err(self.error("missing `endcase`"));
                    }
                    let iloc = self.here();
                    if self.eat_kw("default") {
                        self.eat_sym(":");
                        has_default = true;
                        let body = self.stmt()?;
                        case_items.push(CaseItem {
                            loc: iloc,
                            labels: Vec::new(),
                            is_default: true,
                            body,
                        });
                        continue;
                    }
                    let mut labels = vec![self.expr()?];
                    while self.eat_sym(",") {
                        labels.push(self.expr()?);
                    }
                    self.expect_sym(":")?;
                    let body = self.stmt()?;
                    case_items.push(CaseItem {
                        loc: iloc,
                        labels,
                        is_default: false,
                        body,
                    });
                }
                self.bump();
                Ok(Stmt::Case(CaseStatement {
                    loc,
                    kind,
                    cond_expr,
                    case_items,
                    has_default,
                }))
            }
            (TokenKind::Operator, "@") => {
                self.bump();
                let sens_list = self.event_control()?;
                let body = Box::new(self.stmt()?);
                Ok(Stmt::EventControl(EventControlStatement { loc, sens_list, body }))
            }
            (TokenKind::Operator, "#") => Err(self.error("unsupported construct `#` (delay control)")),
            (TokenKind::Identifier, _) | (TokenKind::Punctuation, "{") => {
                if tok.lexeme.starts_with('$') {
                    return Err(self.error(format!("unsupported construct `{}` (system task)", tok.lexeme)));
                }
                if tok.kind == TokenKind::Identifier
                    && self.peek_at(1).is_some_and(|t| t.lexeme == "(" || t.lexeme == ";")
                {
                    return Err(self.error(format!("unsupported construct `{}` (task call)", tok.lexeme)));
                }
                let lhs = self.lvalue()?;
                let blocking = if self.eat_sym("=") {
                    true
                } else if self.eat_sym("<=") {
                    false
                } else if self.is_sym("#") {
                    return Err(self.error("unsupported construct `#` (intra-assignment delay)"));
                } else {
                    return Err(self.unexpected("`=` or `<=`"));
                };
                if self.is_sym("#") {
                    return Err(self.error("unsupported construct `#` (intra-assignment delay)"));
                }
                let rhs = self.expr()?;
                self.expect_sym(";")?;
                let a = Assignment { loc, lhs, rhs };
                Ok(if blocking {
                    Stmt::Blocking(a)
                } else {
                    Stmt::NonBlocking(a)
                })
            }
            _ => Err(self.unsupported()),
        }
    }

    fn event_control(&mut self) -> PResult<SensList> {
        if self.eat_sym("*") {
            return Ok(SensList {
                star: true,
                items: Vec::new(),
            });
        }
        if !self.is_sym("(") {
            let tok = self.ident()?;
            let id = IdRef {
                loc: tok.loc.clone(),
                name: tok.lexeme.clone(),
                from_macro: tok.macro_origin.is_some(),
            };
            return Ok(SensList {
                star: false,
                items: vec![SensItem {
                    loc: tok.loc.clone(),
                    edge: None,
                    expr: Expr::Id(id),
                }],
            });
        }
        self.bump();
        if self.eat_sym("*") {
            self.expect_sym(")")?;
            return Ok(SensList {
                star: true,
                items: Vec::new(),
            });
        }
        let mut items = Vec::new();
        loop {
            let loc = self.here();
            let edge = if self.eat_kw("posedge") {
                Some(Edge::Posedge)
            } else if self.eat_kw("negedge") {
                Some(Edge::Negedge)
            } else {
                None
            };
            let expr = self.expr()?;
            items.push(SensItem { loc, edge, expr });
            if !(self.eat_sym(",") || self.eat_kw("or")) {
                break;
            }
        }
        self.expect_sym(")")?;
        Ok(SensList { star: false, items })
    }

    fn lvalue(&mut self) -> PResult<Expr> {
        if self.is_sym("{") {
            let loc = self.here();
            self.bump();
            let mut parts = vec![self.lvalue()?];
            while self.eat_sym(",") {
                parts.push(self.lvalue()?);
            }
            self.expect_sym("}")?;
            return Ok(Expr::Concat(Concat { loc, parts }));
        }
        let tok = self.ident()?;
        self.reference(tok)
    }

    // -----------------------------------------------------------------------
    // Expressions

    fn expr(&mut self) -> PResult<Expr> {
        self.enter()?;
        let r = stacker::maybe_grow(RED_ZONE, STACK_CHUNK, || self.ternary());
        self.leave();
        r
    }

    fn ternary(&mut self) -> PResult<Expr> {
        let cond = self.binary(1)?;
        if !self.is_sym("?") {
            return Ok(cond);
        }
        self.bump();
        let then_e = self.expr()?;
        self.expect_sym(":")?;
        let else_e = self.expr()?;
        Ok(Expr::Ternary(Ternary {
            loc: cond.loc().clone(),
            cond: Box::new(cond),
            then_e: Box::new(then_e),
            else_e: Box::new(else_e),
        }))
    }

    fn binary_op(&self) -> Option<BinaryOp> {
        let t = self.peek()?;
        if t.kind != TokenKind::Operator {
            return None;
        }
        BinaryOp::from_token(&t.lexeme)
    }

    fn binary(&mut self, min_prec: u8) -> PResult<Expr> {
        let saved = self.depth;
        let r = self.binary_chain(min_prec);
        self.depth = saved;
        r
    }

    /// Each link of a left-deep chain raises the tree height, so it counts
    /// against the depth limit like any other nesting.
    fn binary_chain(&mut self, min_prec: u8) -> PResult<Expr> {
        let mut lhs = self.unary()?;
        while let Some(op) = self.binary_op() {
            let prec = op.precedence();
            if prec < min_prec {
                break;
            }
            self.bump();
            // `**` is right-associative, everything else left.
            let next = if op == BinaryOp::Pow { prec } else { prec + 1 };
            self.enter()?;
            let rhs = stacker::maybe_grow(RED_ZONE, STACK_CHUNK, || self.binary(next))?;
            lhs = Expr::Binary(Binary {
                loc: lhs.loc().clone(),
                op,
                lhs: Box::new(lhs),
                rhs: Box::new(rhs),
            });
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> PResult<Expr> {
        if let Some(t) = self.peek() {
            if t.kind == TokenKind::Operator {
                if let Some(op) = UnaryOp::from_token(&t.lexeme) {
                    self.bump();
                    self.enter()?;
                    let operand = stacker::maybe_grow(RED_ZONE, STACK_CHUNK, || self.unary());
                    self.leave();
                    return Ok(Expr::Unary(Unary {
                        loc: t.loc.clone(),
                        op,
                        operand: Box::new(operand?),
                    }));
                }
            }
        }
        self.primary()
    }

    fn primary(&mut self) -> PResult<Expr> {
        let Some(tok) = self.peek() else {
            return Err(self.error("expected expression, found end of input"));
        };
        match tok.kind {
            TokenKind::Number => {
                self.bump();
                Ok(Expr::Const(Const {
                    loc: tok.loc.clone(),
                    value: Number::parse(&tok.lexeme),
                    macro_name: tok.macro_origin.as_deref().map(str::to_string),
                }))
            }
            TokenKind::StringLiteral => {
                self.bump();
                Ok(Expr::Str(StrLit {
                    loc: tok.loc.clone(),
                    text: tok.lexeme.clone(),
                }))
            }
            TokenKind::Identifier => {
                self.bump();
                if self.is_sym("(") {
                    self.bump();
                    let mut args = Vec::new();
                    if !self.is_sym(")") {
                        loop {
                            args.push(self.expr()?);
                            if !self.eat_sym(",") {
                                break;
                            }
                        }
                    }
                    self.expect_sym(")")?;
                    return Ok(Expr::Call(Call {
                        loc: tok.loc.clone(),
                        name: tok.lexeme.clone(),
                        args,
                    }));
                }
                if tok.lexeme.starts_with('$') {
                    return Err(Diagnostic::new(
                        tok.loc.clone(),
                        format!("unsupported construct `{}`", tok.lexeme),
                    ));
                }
                self.reference(tok)
            }
            TokenKind::Punctuation if tok.lexeme == "(" => {
                self.bump();
                let e = self.expr()?;
                self.expect_sym(")")?;
                Ok(e)
            }
            TokenKind::Punctuation if tok.lexeme == "{" => {
                self.bump();
                let first = self.expr()?;
                if self.is_sym("{") {
                    self.bump();
                    let mut parts = vec![self.expr()?];
                    while self.eat_sym(",") {
                        parts.push(self.expr()?);
                    }
                    self.expect_sym("}")?;
                    self.expect_sym("}")?;
                    return Ok(Expr::Replicate(Replicate {
                        loc: tok.loc.clone(),
                        count: Box::new(first),
                        parts,
                    }));
                }
                let mut parts = vec![first];
                while self.eat_sym(",") {
                    parts.push(self.expr()?);
                }
                self.expect_sym("}")?;
                Ok(Expr::Concat(Concat {
                    loc: tok.loc.clone(),
                    parts,
                }))
            }
            _ => Err(self.unexpected("expression")),
        }
    }

    /// Identifier (already consumed) with optional hierarchical suffix and
    /// bit/part selects.
    fn reference(&mut self, tok: &'a Token) -> PResult<Expr> {
        let mut name = tok.lexeme.clone();
        while self.is_sym(".") && self.peek_at(1).is_some_and(|t| t.kind == TokenKind::Identifier) {
            self.bump();
            name.push('.');
            name.push_str(&self.bump().expect("checked").lexeme);
        }
        let base = IdRef {
            loc: tok.loc.clone(),
            name,
            from_macro: tok.macro_origin.is_some(),
        };
        if !self.is_sym("[") {
            return Ok(Expr::Id(base));
        }
        let mut selects = Vec::new();
        while self.is_sym("[") {
            self.bump();
            let start = self.pos;
            self.expr()?;
            if self.eat_sym(":") || self.eat_sym("+:") || self.eat_sym("-:") {
                self.expr()?;
            }
            let text: String = self.toks[start..self.pos].iter().map(|t| t.lexeme.as_str()).collect();
            self.expect_sym("]")?;
            selects.push(text);
        }
        Ok(Expr::Indexed(IndexedRef {
            loc: tok.loc.clone(),
            base,
            index_text: selects.join("]["),
        }))
    }
}
