//! Tokenizer for the supported Verilog subset.
//!
//! Comments are dropped. Compiler directives (`` `define ``, `` `NAME ``) come
//! out as identifier tokens whose lexeme keeps the leading backtick; the
//! preprocessor consumes them.

use std::fmt;
use std::sync::Arc;

use crate::loc::{Diagnostic, SourceLoc};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TokenKind {
    Keyword,
    Identifier,
    Number,
    Operator,
    Punctuation,
    StringLiteral,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub kind: TokenKind,
    pub lexeme: String,
    pub loc: SourceLoc,
    /// Name of the macro this token was substituted from, if any.
    pub macro_origin: Option<Arc<str>>,
}

impl Token {
    pub fn new(kind: TokenKind, lexeme: impl Into<String>, loc: SourceLoc) -> Self {
        Token {
            kind,
            lexeme: lexeme.into(),
            loc,
            macro_origin: None,
        }
    }

    pub fn is(&self, kind: TokenKind, lexeme: &str) -> bool {
        self.kind == kind && self.lexeme == lexeme
    }

    pub fn is_directive(&self) -> bool {
        self.kind == TokenKind::Identifier && self.lexeme.starts_with('`')
    }
}

impl fmt::Display for Token {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.lexeme)
    }
}

/// Reserved words recognised by the lexer. Several of them (`interface`,
/// `generate`, `function`, ...) are only here so that the parser can name
/// them when it rejects a file.
pub const KEYWORDS: &[&str] = &[
    "always",
    "always_comb",
    "always_ff",
    "always_latch",
    "and",
    "assign",
    "automatic",
    "begin",
    "case",
    "casex",
    "casez",
    "class",
    "default",
    "defparam",
    "else",
    "end",
    "endcase",
    "endclass",
    "endfunction",
    "endgenerate",
    "endinterface",
    "endmodule",
    "endpackage",
    "endtask",
    "enum",
    "for",
    "forever",
    "function",
    "generate",
    "genvar",
    "if",
    "import",
    "initial",
    "inout",
    "input",
    "integer",
    "interface",
    "localparam",
    "logic",
    "module",
    "negedge",
    "or",
    "output",
    "package",
    "parameter",
    "posedge",
    "priority",
    "real",
    "reg",
    "repeat",
    "signed",
    "struct",
    "task",
    "typedef",
    "unique",
    "unsigned",
    "while",
    "wire",
];

const OPERATORS: &[&str] = &[
    "<<<=", ">>>=", "===", "!==", "<<<", ">>>", "<<=", ">>=", "==", "!=", "<=", ">=", "&&", "||", "<<", ">>", "**",
    "~&", "~|", "~^", "^~", "->", "+:", "-:", "::", "++", "--", "+=", "-=", "*=", "/=", "&=", "|=", "^=", "+", "-",
    "*", "/", "%", "=", "<", ">", "!", "~", "&", "|", "^", "?", ":", "@", "#", ".", "'",
];

pub fn is_keyword(s: &str) -> bool {
    KEYWORDS.binary_search(&s).is_ok()
}

struct Cursor<'a> {
    chars: Vec<char>,
    pos: usize,
    line: u32,
    col: u32,
    file: &'a Arc<str>,
}

impl<'a> Cursor<'a> {
    fn peek(&self) -> Option<char> {
        self.chars.get(self.pos).copied()
    }

    fn peek_at(&self, n: usize) -> Option<char> {
        self.chars.get(self.pos + n).copied()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.chars.get(self.pos).copied()?;
        self.pos += 1;
        if c == '\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(c)
    }

    fn loc(&self) -> SourceLoc {
        SourceLoc::new(self.file.clone(), self.line, self.col)
    }

    fn starts_with(&self, s: &str) -> bool {
        s.chars().enumerate().all(|(i, c)| self.peek_at(i) == Some(c))
    }

    fn skip_to_next_line(&mut self) {
        while let Some(c) = self.bump() {
            if c == '\n' {
                break;
            }
        }
    }

    fn take_while(&mut self, mut pred: impl FnMut(char) -> bool) -> String {
        let mut out = String::new();
        while let Some(c) = self.peek() {
            if !pred(c) {
                break;
            }
            out.push(c);
            self.bump();
        }
        out
    }
}

fn is_ident_start(c: char) -> bool {
    c.is_ascii_alphabetic() || c == '_'
}

fn is_ident_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_' || c == '$'
}

fn is_base_char(c: char) -> bool {
    matches!(c, 'b' | 'B' | 'o' | 'O' | 'd' | 'D' | 'h' | 'H')
}

fn is_based_digit(c: char) -> bool {
    c.is_ascii_hexdigit() || matches!(c, 'x' | 'X' | 'z' | 'Z' | '?' | '_')
}

/// Splits `source` into tokens. Lexical errors (unterminated comments or
/// strings, stray characters) are reported as diagnostics and lexing resumes
/// on the next line.
pub fn tokenize(source: &str, file: &str) -> (Vec<Token>, Vec<Diagnostic>) {
    let file: Arc<str> = Arc::from(file);
    let mut cur = Cursor {
        chars: source.chars().collect(),
        pos: 0,
        line: 1,
        col: 1,
        file: &file,
    };
    let mut tokens = Vec::new();
    let mut diags = Vec::new();

    while let Some(c) = cur.peek() {
        if c.is_whitespace() {
            cur.bump();
            continue;
        }
        let start = cur.loc();

        if cur.starts_with("//") {
            cur.skip_to_next_line();
            continue;
        }
        if cur.starts_with("/*") {
            let save = (cur.pos, cur.line, cur.col);
            cur.bump();
            cur.bump();
            let mut closed = false;
            while cur.peek().is_some() {
                if cur.starts_with("*/") {
                    cur.bump();
                    cur.bump();
                    closed = true;
                    break;
                }
                cur.bump();
            }
            if !closed {
                diags.push(Diagnostic::new(start, "unterminated block comment"));
                cur.pos = save.0;
                cur.line = save.1;
                cur.col = save.2;
                cur.skip_to_next_line();
            }
            continue;
        }
        if c == '"' {
            cur.bump();
            let mut text = String::from('"');
            let mut closed = false;
            while let Some(ch) = cur.peek() {
                if ch == '\n' {
                    break;
                }
                cur.bump();
                text.push(ch);
                if ch == '\\' {
                    if let Some(esc) = cur.peek() {
                        if esc != '\n' {
                            cur.bump();
                            text.push(esc);
                        }
                    }
                } else if ch == '"' {
                    closed = true;
                    break;
                }
            }
            if closed {
                tokens.push(Token::new(TokenKind::StringLiteral, text, start));
            } else {
                diags.push(Diagnostic::new(start, "unterminated string literal"));
                cur.skip_to_next_line();
            }
            continue;
        }
        if c == '`' {
            cur.bump();
            let name = cur.take_while(is_ident_char);
            if name.is_empty() || !name.starts_with(is_ident_start) {
                diags.push(Diagnostic::new(start, "stray backtick"));
                continue;
            }
            tokens.push(Token::new(TokenKind::Identifier, format!("`{name}"), start));
            continue;
        }
        if is_ident_start(c) || c == '$' {
            let mut word = String::new();
            word.push(c);
            cur.bump();
            word.push_str(&cur.take_while(is_ident_char));
            let kind = if is_keyword(&word) {
                TokenKind::Keyword
            } else {
                TokenKind::Identifier
            };
            tokens.push(Token::new(kind, word, start));
            continue;
        }
        if c == '\\' {
            cur.bump();
            let name = cur.take_while(|ch| !ch.is_whitespace());
            if name.is_empty() {
                diags.push(Diagnostic::new(start, "empty escaped identifier"));
            } else {
                tokens.push(Token::new(TokenKind::Identifier, name, start));
            }
            continue;
        }
        if c.is_ascii_digit() {
            let mut text = cur.take_while(|ch| ch.is_ascii_digit() || ch == '_');
            if cur.peek() == Some('.') && cur.peek_at(1).is_some_and(|d| d.is_ascii_digit()) {
                cur.bump();
                text.push('.');
                text.push_str(&cur.take_while(|ch| ch.is_ascii_digit() || ch == '_'));
            }
            // A size may be separated from its base by whitespace: `8 'hff`.
            let mut look = 0;
            while cur.peek_at(look).is_some_and(|ch| ch == ' ' || ch == '\t') {
                look += 1;
            }
            if cur.peek_at(look) == Some('\'') && based_suffix_at(&cur, look + 1) {
                for _ in 0..look {
                    cur.bump();
                }
                text.push_str(&lex_based_suffix(&mut cur));
            }
            tokens.push(Token::new(TokenKind::Number, text, start));
            continue;
        }
        if c == '\'' {
            if based_suffix_at(&cur, 1) {
                let text = lex_based_suffix(&mut cur);
                tokens.push(Token::new(TokenKind::Number, text, start));
                continue;
            }
            if matches!(cur.peek_at(1), Some('0' | '1' | 'x' | 'X' | 'z' | 'Z'))
                && !cur.peek_at(2).is_some_and(is_ident_char)
            {
                let mut text = String::from('\'');
                cur.bump();
                text.push(cur.bump().unwrap_or('0'));
                tokens.push(Token::new(TokenKind::Number, text, start));
                continue;
            }
        }
        if matches!(c, '(' | ')' | '[' | ']' | '{' | '}' | ';' | ',') {
            cur.bump();
            tokens.push(Token::new(TokenKind::Punctuation, c.to_string(), start));
            continue;
        }
        if let Some(op) = OPERATORS.iter().find(|op| cur.starts_with(op)) {
            for _ in 0..op.chars().count() {
                cur.bump();
            }
            tokens.push(Token::new(TokenKind::Operator, *op, start));
            continue;
        }
        diags.push(Diagnostic::new(start, format!("unexpected character {c:?}")));
        cur.skip_to_next_line();
    }
    (tokens, diags)
}

/// True when the text at `offset` (just after a `'`) looks like `[s]<base><digits>`.
fn based_suffix_at(cur: &Cursor<'_>, offset: usize) -> bool {
    let mut i = offset;
    if matches!(cur.peek_at(i), Some('s' | 'S')) {
        i += 1;
    }
    if !cur.peek_at(i).is_some_and(is_base_char) {
        return false;
    }
    i += 1;
    while cur.peek_at(i).is_some_and(|ch| ch == ' ' || ch == '\t') {
        i += 1;
    }
    cur.peek_at(i).is_some_and(is_based_digit)
}

fn lex_based_suffix(cur: &mut Cursor<'_>) -> String {
    let mut text = String::new();
    text.push(cur.bump().unwrap_or('\''));
    if matches!(cur.peek(), Some('s' | 'S')) {
        text.push(cur.bump().unwrap_or('s'));
    }
    text.push(cur.bump().unwrap_or('d'));
    cur.take_while(|ch| ch == ' ' || ch == '\t');
    text.push_str(&cur.take_while(is_based_digit));
    text
}
