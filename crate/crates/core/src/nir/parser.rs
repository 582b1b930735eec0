//! Text front end for NIR.
//!
//! The grammar is token based, so newlines only matter for `#` comments; the
//! canonical printer still emits one item per line.

use std::collections::HashMap;
use std::fmt;

use super::ast::{BinaryOp, Circuit, Decl, Direction, Expr, ModuleDef, Port, Stmt, UnaryOp, Width};
use super::diag::{DiagCode, Site};
use super::validate::validate_circuit;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Pos {
    pub line: usize,
    pub col: usize,
}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("{pos}: {code}: {message}")]
pub struct ParseError {
    pub pos: Pos,
    pub code: DiagCode,
    pub message: String,
}

impl ParseError {
    fn syntax(pos: Pos, message: impl Into<String>) -> Self {
        ParseError { pos, code: DiagCode::Syntax, message: message.into() }
    }
}

const STMT_KEYWORDS: [&str; 9] = ["circuit", "module", "input", "output", "wire", "reg", "mem", "inst", "read"];

fn is_reserved(name: &str) -> bool {
    STMT_KEYWORDS.contains(&name) || name == "write"
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Ident(String),
    Int(u64),
    Colon,
    Lt,
    Gt,
    LParen,
    RParen,
    LBracket,
    RBracket,
    Comma,
    Dot,
    Arrow,
    Eof,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Ident(s) => write!(f, "`{s}`"),
            Tok::Int(v) => write!(f, "`{v}`"),
            Tok::Colon => f.write_str("`:`"),
            Tok::Lt => f.write_str("`<`"),
            Tok::Gt => f.write_str("`>`"),
            Tok::LParen => f.write_str("`(`"),
            Tok::RParen => f.write_str("`)`"),
            Tok::LBracket => f.write_str("`[`"),
            Tok::RBracket => f.write_str("`]`"),
            Tok::Comma => f.write_str("`,`"),
            Tok::Dot => f.write_str("`.`"),
            Tok::Arrow => f.write_str("`<=`"),
            Tok::Eof => f.write_str("end of input"),
        }
    }
}

fn lex(text: &str) -> Result<Vec<(Tok, Pos)>, ParseError> {
    let mut out = Vec::new();
    let chars: Vec<char> = text.chars().collect();
    let (mut i, mut line, mut col) = (0usize, 1usize, 1usize);
    while i < chars.len() {
        let c = chars[i];
        let pos = Pos { line, col };
        if c == '\n' {
            i += 1;
            line += 1;
            col = 1;
            continue;
        }
        if c.is_whitespace() {
            i += 1;
            col += 1;
            continue;
        }
        if c == '#' {
            while i < chars.len() && chars[i] != '\n' {
                i += 1;
            }
            continue;
        }
        let start = i;
        let tok = if c.is_ascii_alphabetic() || c == '_' {
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            Tok::Ident(chars[start..i].iter().collect())
        } else if c.is_ascii_digit() {
            while i < chars.len() && chars[i].is_ascii_alphanumeric() {
                i += 1;
            }
            let s: String = chars[start..i].iter().collect();
            Tok::Int(parse_int(&s).ok_or_else(|| ParseError::syntax(pos, format!("invalid integer literal `{s}`")))?)
        } else {
            i += 1;
            match c {
                ':' => Tok::Colon,
                '<' if chars.get(i) == Some(&'=') => {
                    i += 1;
                    Tok::Arrow
                }
                '<' => Tok::Lt,
                '>' => Tok::Gt,
                '(' => Tok::LParen,
                ')' => Tok::RParen,
                '[' => Tok::LBracket,
                ']' => Tok::RBracket,
                ',' => Tok::Comma,
                '.' => Tok::Dot,
                _ => return Err(ParseError::syntax(pos, format!("unexpected character `{c}`"))),
            }
        };
        col += i - start;
        out.push((tok, pos));
    }
    out.push((Tok::Eof, Pos { line, col }));
    Ok(out)
}

/// Decimal or `0x` hexadecimal; `_` separators are not accepted.
pub fn parse_int(s: &str) -> Option<u64> {
    if let Some(hex) = s.strip_prefix("0x").or_else(|| s.strip_prefix("0X")) {
        if hex.is_empty() {
            return None;
        }
        u64::from_str_radix(hex, 16).ok()
    } else if !s.is_empty() && s.bytes().all(|b| b.is_ascii_digit()) {
        s.parse().ok()
    } else {
        None
    }
}

#[derive(Default)]
struct ModuleSpans {
    header: Pos,
    ports: Vec<Pos>,
    decls: Vec<Pos>,
    stmts: Vec<Pos>,
}

struct Parser {
    toks: Vec<(Tok, Pos)>,
    at: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.at].0
    }

    fn peek2(&self) -> &Tok {
        &self.toks[(self.at + 1).min(self.toks.len() - 1)].0
    }

    fn pos(&self) -> Pos {
        self.toks[self.at].1
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.at].0.clone();
        if self.at + 1 < self.toks.len() {
            self.at += 1;
        }
        t
    }

    fn expect(&mut self, want: Tok) -> Result<(), ParseError> {
        if *self.peek() == want {
            self.bump();
            Ok(())
        } else {
            Err(ParseError::syntax(self.pos(), format!("expected {want}, found {}", self.peek())))
        }
    }

    fn ident(&mut self) -> Result<String, ParseError> {
        match self.peek() {
            Tok::Ident(_) => match self.bump() {
                Tok::Ident(s) => Ok(s),
                _ => unreachable!(),
            },
            t => Err(ParseError::syntax(self.pos(), format!("expected identifier, found {t}"))),
        }
    }

    fn decl_name(&mut self) -> Result<String, ParseError> {
        let pos = self.pos();
        let name = self.ident()?;
        if is_reserved(&name) {
            return Err(ParseError::syntax(pos, format!("`{name}` is a reserved keyword")));
        }
        Ok(name)
    }

    fn keyword(&mut self, kw: &str) -> Result<(), ParseError> {
        match self.peek() {
            Tok::Ident(s) if s == kw => {
                self.bump();
                Ok(())
            }
            t => Err(ParseError::syntax(self.pos(), format!("expected `{kw}`, found {t}"))),
        }
    }

    fn int(&mut self) -> Result<u64, ParseError> {
        match self.peek() {
            Tok::Int(v) => {
                let v = *v;
                self.bump();
                Ok(v)
            }
            t => Err(ParseError::syntax(self.pos(), format!("expected integer, found {t}"))),
        }
    }

    fn small_int(&mut self, what: &str) -> Result<u32, ParseError> {
        let pos = self.pos();
        let v = self.int()?;
        u32::try_from(v).map_err(|_| ParseError::syntax(pos, format!("{what} {v} is too large")))
    }

    fn path(&mut self) -> Result<String, ParseError> {
        let mut p = self.ident()?;
        while *self.peek() == Tok::Dot {
            self.bump();
            p.push('.');
            p.push_str(&self.ident()?);
        }
        Ok(p)
    }

    /// `UInt<w>`
    fn uint_type(&mut self) -> Result<Width, ParseError> {
        self.keyword("UInt")?;
        self.expect(Tok::Lt)?;
        let w = self.small_int("width")?;
        self.expect(Tok::Gt)?;
        Ok(w)
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let pos = self.pos();
        let name = match self.peek() {
            Tok::Ident(s) => s.clone(),
            t => return Err(ParseError::syntax(pos, format!("expected expression, found {t}"))),
        };
        if name == "UInt" && *self.peek2() == Tok::Lt {
            let width = self.uint_type()?;
            self.expect(Tok::LParen)?;
            let value = self.int()?;
            self.expect(Tok::RParen)?;
            return Ok(Expr::Literal { width, value });
        }
        if *self.peek2() != Tok::LParen {
            return Ok(Expr::Ref(self.path()?));
        }
        self.bump();
        self.expect(Tok::LParen)?;
        let e = match name.as_str() {
            "mux" => {
                let c = self.expr()?;
                self.expect(Tok::Comma)?;
                let a = self.expr()?;
                self.expect(Tok::Comma)?;
                let b = self.expr()?;
                Expr::mux(c, a, b)
            }
            "not" => Expr::Unary(UnaryOp::Not, Box::new(self.expr()?)),
            "bits" => {
                let arg = self.expr()?;
                self.expect(Tok::Comma)?;
                let hi = self.small_int("bit index")?;
                self.expect(Tok::Comma)?;
                let lo = self.small_int("bit index")?;
                Expr::bits(arg, hi, lo)
            }
            other => {
                let op = BinaryOp::from_keyword(other)
                    .ok_or_else(|| ParseError::syntax(pos, format!("unknown operator `{other}`")))?;
                let a = self.expr()?;
                self.expect(Tok::Comma)?;
                let b = self.expr()?;
                Expr::bin(op, a, b)
            }
        };
        self.expect(Tok::RParen)?;
        Ok(e)
    }

    fn circuit(&mut self) -> Result<(Circuit, HashMap<String, ModuleSpans>, Pos), ParseError> {
        let header = self.pos();
        self.keyword("circuit")?;
        let name = self.ident()?;
        self.expect(Tok::Colon)?;
        let mut modules = Vec::new();
        let mut spans = HashMap::new();
        while *self.peek() != Tok::Eof {
            let (m, s) = self.module()?;
            spans.entry(m.name.clone()).or_insert(s);
            modules.push(m);
        }
        Ok((Circuit { top: name.clone(), name, modules }, spans, header))
    }

    fn module(&mut self) -> Result<(ModuleDef, ModuleSpans), ParseError> {
        let mut spans = ModuleSpans { header: self.pos(), ..Default::default() };
        self.keyword("module")?;
        let name = self.ident()?;
        self.expect(Tok::Colon)?;
        let mut m = ModuleDef::new(name);
        // Connections are classified once all registers of the module are known.
        let mut raw: Vec<(Pos, RawStmt)> = Vec::new();
        loop {
            let pos = self.pos();
            let kw = match self.peek() {
                Tok::Eof => break,
                Tok::Ident(s) if s == "module" => break,
                Tok::Ident(s) => s.clone(),
                t => return Err(ParseError::syntax(pos, format!("expected a declaration or statement, found {t}"))),
            };
            let is_stmt_kw = is_reserved(&kw) && !matches!(self.peek2(), Tok::Arrow | Tok::Dot);
            if !is_stmt_kw {
                let lhs = self.path()?;
                self.expect(Tok::Arrow)?;
                let rhs = self.expr()?;
                raw.push((pos, RawStmt::Connect(lhs, rhs)));
                continue;
            }
            self.bump();
            match kw.as_str() {
                "input" | "output" => {
                    let name = self.decl_name()?;
                    self.expect(Tok::Colon)?;
                    let width = self.uint_type()?;
                    let direction = if kw == "input" { Direction::Input } else { Direction::Output };
                    m.ports.push(Port { name, direction, width });
                    spans.ports.push(pos);
                }
                "wire" => {
                    let name = self.decl_name()?;
                    self.expect(Tok::Colon)?;
                    let width = self.uint_type()?;
                    m.decls.push(Decl::Wire { name, width });
                    spans.decls.push(pos);
                }
                "reg" => {
                    let name = self.decl_name()?;
                    self.expect(Tok::Colon)?;
                    let width = self.uint_type()?;
                    self.keyword("init")?;
                    let init = self.int()?;
                    m.decls.push(Decl::Reg { name, width, init });
                    spans.decls.push(pos);
                }
                "mem" => {
                    let name = self.decl_name()?;
                    self.expect(Tok::Colon)?;
                    let width = self.uint_type()?;
                    self.expect(Tok::LBracket)?;
                    let depth = self.small_int("depth")?;
                    self.expect(Tok::RBracket)?;
                    m.decls.push(Decl::Mem { name, width, depth });
                    spans.decls.push(pos);
                }
                "inst" => {
                    let name = self.decl_name()?;
                    self.keyword("of")?;
                    let module = self.ident()?;
                    m.decls.push(Decl::Instance { name, module });
                    spans.decls.push(pos);
                }
                "read" => {
                    let dst = self.path()?;
                    self.expect(Tok::Arrow)?;
                    let mem = self.path()?;
                    self.expect(Tok::LBracket)?;
                    let addr = self.expr()?;
                    self.expect(Tok::RBracket)?;
                    raw.push((pos, RawStmt::Done(Stmt::MemRead { dst, mem, addr })));
                }
                "write" => {
                    let mem = self.path()?;
                    self.expect(Tok::LBracket)?;
                    let addr = self.expr()?;
                    self.expect(Tok::RBracket)?;
                    self.expect(Tok::Arrow)?;
                    let data = self.expr()?;
                    self.keyword("when")?;
                    let en = self.expr()?;
                    raw.push((pos, RawStmt::Done(Stmt::MemWrite { mem, addr, data, en })));
                }
                other => return Err(ParseError::syntax(pos, format!("`{other}` is not allowed inside a module"))),
            }
        }
        for (pos, r) in raw {
            let stmt = match r {
                RawStmt::Done(s) => s,
                RawStmt::Connect(lhs, rhs) => {
                    if matches!(m.decl(&lhs), Some(Decl::Reg { .. })) {
                        Stmt::RegNext { reg: lhs, rhs }
                    } else {
                        Stmt::Connect { lhs, rhs }
                    }
                }
            };
            m.stmts.push(stmt);
            spans.stmts.push(pos);
        }
        Ok((m, spans))
    }
}

enum RawStmt {
    Connect(String, Expr),
    Done(Stmt),
}

/// Parses NIR text and rejects syntax, duplicate, resolution and width
/// errors with the position of the offending item.
///
/// Driver-count and loop problems are left to [`validate_circuit`].
pub fn parse_circuit(text: &str) -> Result<Circuit, ParseError> {
    let mut p = Parser { toks: lex(text)?, at: 0 };
    let (circuit, spans, header) = p.circuit()?;
    let fatal = validate_circuit(&circuit).into_iter().find(|d| {
        !matches!(d.code, DiagCode::MultiDrive | DiagCode::Undriven | DiagCode::CombLoop)
    });
    if let Some(d) = fatal {
        let pos = d
            .module
            .as_ref()
            .and_then(|m| spans.get(m))
            .and_then(|s| match d.site {
                Some(Site::Port(i)) => s.ports.get(i).copied(),
                Some(Site::Decl(i)) => s.decls.get(i).copied(),
                Some(Site::Stmt(i)) => s.stmts.get(i).copied(),
                Some(Site::Module) | None => Some(s.header),
            })
            .unwrap_or(header);
        return Err(ParseError { pos, code: d.code, message: d.message });
    }
    Ok(circuit)
}
