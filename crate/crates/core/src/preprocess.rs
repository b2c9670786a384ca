//! A small preprocessor: constant macros, includes and conditional blocks.
//!
//! Macros carry no arguments. A reference to an undefined macro is replaced
//! by an identifier bearing the macro's name, so `` `HOLD `` still reads as a
//! state label downstream.

use std::collections::HashMap;
use std::io;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use crate::lexer::{tokenize, Token, TokenKind};
use crate::loc::Diagnostic;

const MAX_EXPANSION_DEPTH: usize = 32;

/// Macro name (without backtick) to replacement tokens.
#[derive(Debug, Clone, Default)]
pub struct MacroTable {
    defs: HashMap<String, Vec<Token>>,
}

impl MacroTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn define(&mut self, name: impl Into<String>, body: Vec<Token>) {
        self.defs.insert(name.into(), body);
    }

    pub fn get(&self, name: &str) -> Option<&[Token]> {
        self.defs.get(name).map(Vec::as_slice)
    }

    pub fn undefine(&mut self, name: &str) {
        self.defs.remove(name);
    }

    pub fn contains(&self, name: &str) -> bool {
        self.defs.contains_key(name)
    }

    pub fn len(&self) -> usize {
        self.defs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.defs.is_empty()
    }
}

/// Source of text for `` `include `` targets.
pub trait IncludeLoader {
    fn load(&mut self, path: &Path) -> io::Result<String>;
}

/// Reads include files from disk.
#[derive(Debug, Default, Clone, Copy)]
pub struct FsLoader;

impl IncludeLoader for FsLoader {
    fn load(&mut self, path: &Path) -> io::Result<String> {
        let bytes = std::fs::read(path)?;
        Ok(String::from_utf8_lossy(&bytes).into_owned())
    }
}

#[derive(Debug, Clone, Default)]
pub struct Preprocessed {
    pub tokens: Vec<Token>,
    pub diagnostics: Vec<Diagnostic>,
    /// Include files that were resolved and spliced in.
    pub includes: Vec<PathBuf>,
}

/// Runs the preprocessor with includes read from the filesystem.
pub fn preprocess(tokens: Vec<Token>, macros: &mut MacroTable) -> Preprocessed {
    preprocess_with(tokens, macros, &mut FsLoader)
}

pub fn preprocess_with(tokens: Vec<Token>, macros: &mut MacroTable, loader: &mut dyn IncludeLoader) -> Preprocessed {
    let mut pp = Pass {
        macros,
        loader,
        out: Preprocessed::default(),
        include_stack: Vec::new(),
    };
    if let Some(first) = tokens.first() {
        pp.include_stack.push(PathBuf::from(&*first.loc.file));
    }
    pp.run(tokens);
    pp.out
}

struct Pass<'a> {
    macros: &'a mut MacroTable,
    loader: &'a mut dyn IncludeLoader,
    out: Preprocessed,
    include_stack: Vec<PathBuf>,
}

/// State of one `` `ifdef `` level.
#[derive(Clone, Copy)]
struct CondFrame {
    parent_active: bool,
    active: bool,
    taken: bool,
}

impl Pass<'_> {
    fn run(&mut self, tokens: Vec<Token>) {
        let mut conds: Vec<CondFrame> = Vec::new();
        let mut i = 0;
        while i < tokens.len() {
            let tok = &tokens[i];
            let active = conds.last().is_none_or(|f| f.active);
            if !tok.is_directive() {
                if active {
                    self.out.tokens.push(tok.clone());
                }
                i += 1;
                continue;
            }
            let name = &tok.lexeme[1..];
            let line = tok.loc.line;
            let same_line = |j: usize| tokens.get(j).filter(|t| t.loc.line == line);
            match name {
                "ifdef" | "ifndef" | "elsif" => {
                    let arg = same_line(i + 1).map(|t| t.lexeme.clone());
                    let defined = arg.as_deref().is_some_and(|a| self.macros.contains(a));
                    if arg.is_none() {
                        self.diag(tok, format!("`{name} without a macro name"));
                    }
                    match name {
                        "elsif" => match conds.last_mut() {
                            Some(f) => {
                                f.active = f.parent_active && !f.taken && defined;
                                f.taken |= f.active;
                            }
                            None => self.diag(tok, "`elsif without `ifdef"),
                        },
                        _ => {
                            let want = if name == "ifdef" { defined } else { !defined };
                            let on = active && want;
                            conds.push(CondFrame {
                                parent_active: active,
                                active: on,
                                taken: on,
                            });
                        }
                    }
                    i += if arg.is_some() { 2 } else { 1 };
                }
                "else" => {
                    match conds.last_mut() {
                        Some(f) => {
                            f.active = f.parent_active && !f.taken;
                            f.taken = true;
                        }
                        None => self.diag(tok, "`else without `ifdef"),
                    }
                    i += 1;
                }
                "endif" => {
                    if conds.pop().is_none() {
                        self.diag(tok, "`endif without `ifdef");
                    }
                    i += 1;
                }
                _ if !active => i += 1,
                "define" => {
                    let Some(name_tok) = same_line(i + 1) else {
                        self.diag(tok, "`define without a macro name");
                        i += 1;
                        continue;
                    };
                    let mut j = i + 2;
                    let mut body = Vec::new();
                    while let Some(t) = same_line(j) {
                        body.push(t.clone());
                        j += 1;
                    }
                    let function_like = body.first().is_some_and(|t| {
                        t.lexeme == "("
                            && t.loc.line == name_tok.loc.line
                            && t.loc.col as usize == name_tok.loc.col as usize + name_tok.lexeme.chars().count()
                    });
                    if function_like {
                        self.diag(
                            name_tok,
                            format!("macro `{}` takes arguments, which are not supported", name_tok.lexeme),
                        );
                    } else {
                        self.macros.define(name_tok.lexeme.clone(), body);
                    }
                    i = j;
                }
                "undef" => {
                    if let Some(t) = same_line(i + 1) {
                        self.macros.undefine(&t.lexeme);
                        i += 2;
                    } else {
                        i += 1;
                    }
                }
                "include" => match same_line(i + 1).filter(|t| t.kind == TokenKind::StringLiteral) {
                    Some(path_tok) => {
                        let target = path_tok.lexeme.trim_matches('"').to_string();
                        self.include(tok, &target);
                        i += 2;
                    }
                    None => {
                        self.diag(tok, "`include expects a quoted file name");
                        i += 1;
                    }
                },
                "timescale" | "default_nettype" | "line" | "pragma" | "begin_keywords" => {
                    let mut j = i + 1;
                    while same_line(j).is_some() {
                        j += 1;
                    }
                    i = j;
                }
                "resetall" | "celldefine" | "endcelldefine" | "nounconnected_drive" | "end_keywords" => i += 1,
                _ => {
                    let mut expanded = Vec::new();
                    self.expand(tok, name, 0, &mut expanded);
                    self.out.tokens.extend(expanded);
                    i += 1;
                }
            }
        }
        if !conds.is_empty() {
            if let Some(last) = tokens.last() {
                self.diag(last, "unterminated `ifdef block");
            }
        }
    }

    fn expand(&mut self, site: &Token, name: &str, depth: usize, out: &mut Vec<Token>) {
        let origin: Arc<str> = Arc::from(name);
        let Some(body) = self.macros.get(name).map(<[Token]>::to_vec) else {
            self.diag(site, format!("undefined macro `{name}"));
            let mut t = Token::new(TokenKind::Identifier, name, site.loc.clone());
            t.macro_origin = Some(origin);
            out.push(t);
            return;
        };
        if depth >= MAX_EXPANSION_DEPTH {
            self.diag(site, format!("macro `{name} expands too deeply"));
            return;
        }
        for t in body {
            if t.is_directive() {
                let inner = t.lexeme[1..].to_string();
                self.expand(site, &inner, depth + 1, out);
            } else {
                let mut t = t;
                t.loc = site.loc.clone();
                t.macro_origin = Some(origin.clone());
                out.push(t);
            }
        }
    }

    fn include(&mut self, site: &Token, target: &str) {
        let base = Path::new(&*site.loc.file)
            .parent()
            .map(Path::to_path_buf)
            .unwrap_or_default();
        let path = base.join(target);
        let key = normalize(&path);
        if self.include_stack.iter().any(|p| normalize(p) == key) {
            self.diag(site, format!("include cycle through \"{target}\""));
            return;
        }
        let text = match self.loader.load(&path) {
            Ok(text) => text,
            Err(e) => {
                self.diag(site, format!("cannot include \"{target}\": {e}"));
                return;
            }
        };
        let display = path.to_string_lossy().into_owned();
        let (tokens, diags) = tokenize(&text, &display);
        self.out.diagnostics.extend(diags);
        self.out.includes.push(path.clone());
        self.include_stack.push(path);
        self.run(tokens);
        self.include_stack.pop();
    }

    fn diag(&mut self, tok: &Token, msg: impl Into<String>) {
        self.out.diagnostics.push(Diagnostic::new(tok.loc.clone(), msg));
    }
}

fn normalize(p: &Path) -> PathBuf {
    std::fs::canonicalize(p).unwrap_or_else(|_| {
        let mut out = PathBuf::new();
        for c in p.components() {
            match c {
                std::path::Component::CurDir => {}
                std::path::Component::ParentDir => {
                    out.pop();
                }
                other => out.push(other),
            }
        }
        out
    })
}
