//! Trigger conditions: Boolean functions over circuit signals, parametrized
//! by scan fields introduced inline with `$sf(name, width)`.
//!
//! ```text
//! cond := or ; or := and { "||" and } ; and := not { "&&" not }
//! not  := [ "!" ] atom
//! atom := "(" cond ")" | term ( ("=="|"!="|"<"|">") term )?
//! term := "$sf(" id "," int ")" | path | literal
//! ```
//!
//! Literals are `UInt<w>(v)` or a bare decimal/hex number, which takes the
//! width of the other comparison operand.

use std::collections::HashMap;
use std::fmt;

use crate::nir::{mask, parse_int, SignalScope, Width, MAX_WIDTH};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CompareOp {
    Eq,
    Neq,
    Lt,
    Gt,
}

impl CompareOp {
    pub fn symbol(self) -> &'static str {
        match self {
            CompareOp::Eq => "==",
            CompareOp::Neq => "!=",
            CompareOp::Lt => "<",
            CompareOp::Gt => ">",
        }
    }

    fn apply(self, a: u64, b: u64) -> bool {
        match self {
            CompareOp::Eq => a == b,
            CompareOp::Neq => a != b,
            CompareOp::Lt => a < b,
            CompareOp::Gt => a > b,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CondExpr {
    ScanField { name: String, width: Width },
    Signal { path: String, width: Width },
    Literal { width: Width, value: u64 },
    Compare { op: CompareOp, lhs: Box<CondExpr>, rhs: Box<CondExpr> },
    And(Box<CondExpr>, Box<CondExpr>),
    Or(Box<CondExpr>, Box<CondExpr>),
    Not(Box<CondExpr>),
}

impl CondExpr {
    /// Width of a term; Boolean nodes are one bit.
    pub fn width(&self) -> Width {
        match self {
            CondExpr::ScanField { width, .. } | CondExpr::Signal { width, .. } | CondExpr::Literal { width, .. } => {
                *width
            }
            _ => 1,
        }
    }

    /// Distinct signal paths in first-occurrence order.
    pub fn signals(&self) -> Vec<(&str, Width)> {
        let mut out: Vec<(&str, Width)> = Vec::new();
        self.walk(&mut |e| {
            if let CondExpr::Signal { path, width } = e {
                if !out.iter().any(|(p, _)| p == path) {
                    out.push((path, *width));
                }
            }
        });
        out
    }

    fn walk<'a>(&'a self, f: &mut impl FnMut(&'a CondExpr)) {
        f(self);
        match self {
            CondExpr::Compare { lhs, rhs, .. } | CondExpr::And(lhs, rhs) | CondExpr::Or(lhs, rhs) => {
                lhs.walk(f);
                rhs.walk(f);
            }
            CondExpr::Not(a) => a.walk(f),
            _ => {}
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScanFieldDecl {
    pub name: String,
    pub width: Width,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CondErrorKind {
    Syntax(String),
    Unresolved(String),
    WidthMismatch { lhs: Width, rhs: Width },
    NotBoolean(Width),
    Conflict { name: String, first: Width, second: Width },
    BadWidth(u64),
    LiteralTooWide { value: u64, width: Width },
}

impl fmt::Display for CondErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CondErrorKind::Syntax(s) => write!(f, "syntax error: {s}"),
            CondErrorKind::Unresolved(p) => write!(f, "unresolved signal `{p}`"),
            CondErrorKind::WidthMismatch { lhs, rhs } => {
                write!(f, "width mismatch: comparing UInt<{lhs}> with UInt<{rhs}>")
            }
            CondErrorKind::NotBoolean(w) => write!(f, "expected a 1-bit operand, found UInt<{w}>"),
            CondErrorKind::Conflict { name, first, second } => {
                write!(f, "scan field `{name}` declared with width {first} and {second}")
            }
            CondErrorKind::BadWidth(w) => write!(f, "scan field width {w} out of range 1..=64"),
            CondErrorKind::LiteralTooWide { value, width } => write!(f, "literal {value} does not fit in UInt<{width}>"),
        }
    }
}

/// A condition diagnostic; `col` is the 1-based character column.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("column {col}: {kind}")]
pub struct CondError {
    pub col: usize,
    pub kind: CondErrorKind,
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Sf,
    Ident(String),
    Int(u64),
    LParen,
    RParen,
    Comma,
    Dot,
    Lt,
    Gt,
    EqEq,
    NotEq,
    AndAnd,
    OrOr,
    Bang,
    Eof,
}

fn lex(text: &str) -> Result<Vec<(Tok, usize)>, CondError> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    let err = |i: usize, msg: String| CondError { col: i + 1, kind: CondErrorKind::Syntax(msg) };
    while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        let start = i;
        let next = chars.get(i + 1).copied();
        let tok = match c {
            '$' => {
                let word: String = chars[i + 1..].iter().take_while(|c| c.is_ascii_alphanumeric()).collect();
                if word != "sf" {
                    return Err(err(i, format!("unknown directive `${word}`")));
                }
                i += 3;
                Tok::Sf
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                    i += 1;
                }
                Tok::Ident(chars[start..i].iter().collect())
            }
            c if c.is_ascii_digit() => {
                while i < chars.len() && chars[i].is_ascii_alphanumeric() {
                    i += 1;
                }
                let s: String = chars[start..i].iter().collect();
                Tok::Int(parse_int(&s).ok_or_else(|| err(start, format!("invalid integer literal `{s}`")))?)
            }
            '=' if next == Some('=') => {
                i += 2;
                Tok::EqEq
            }
            '!' if next == Some('=') => {
                i += 2;
                Tok::NotEq
            }
            '&' if next == Some('&') => {
                i += 2;
                Tok::AndAnd
            }
            '|' if next == Some('|') => {
                i += 2;
                Tok::OrOr
            }
            _ => {
                i += 1;
                match c {
                    '(' => Tok::LParen,
                    ')' => Tok::RParen,
                    ',' => Tok::Comma,
                    '.' => Tok::Dot,
                    '<' => Tok::Lt,
                    '>' => Tok::Gt,
                    '!' => Tok::Bang,
                    _ => return Err(err(start, format!("unexpected character `{c}`"))),
                }
            }
        };
        out.push((tok, start + 1));
    }
    out.push((Tok::Eof, chars.len() + 1));
    Ok(out)
}

/// A term before width assignment: bare literals stay unsized until paired.
enum Term {
    Sized(CondExpr),
    Bare(u64),
}

struct Parser<'s> {
    toks: Vec<(Tok, usize)>,
    at: usize,
    scope: &'s dyn SignalScope,
    fields: Vec<ScanFieldDecl>,
}

impl Parser<'_> {
    fn peek(&self) -> &Tok {
        &self.toks[self.at].0
    }

    fn col(&self) -> usize {
        self.toks[self.at].1
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.at].0.clone();
        if self.at + 1 < self.toks.len() {
            self.at += 1;
        }
        t
    }

    fn fail<T>(&self, kind: CondErrorKind) -> Result<T, CondError> {
        Err(CondError { col: self.col(), kind })
    }

    fn expect(&mut self, want: Tok, what: &str) -> Result<(), CondError> {
        if *self.peek() == want {
            self.bump();
            Ok(())
        } else {
            self.fail(CondErrorKind::Syntax(format!("expected {what}")))
        }
    }

    fn or(&mut self) -> Result<CondExpr, CondError> {
        let mut lhs = self.and()?;
        while *self.peek() == Tok::OrOr {
            self.bump();
            let rhs = self.and()?;
            lhs = CondExpr::Or(Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn and(&mut self) -> Result<CondExpr, CondError> {
        let mut lhs = self.not()?;
        while *self.peek() == Tok::AndAnd {
            self.bump();
            let rhs = self.not()?;
            lhs = CondExpr::And(Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn not(&mut self) -> Result<CondExpr, CondError> {
        if *self.peek() == Tok::Bang {
            self.bump();
            return Ok(CondExpr::Not(Box::new(self.not()?)));
        }
        self.atom()
    }

    fn atom(&mut self) -> Result<CondExpr, CondError> {
        if *self.peek() == Tok::LParen {
            self.bump();
            let e = self.or()?;
            self.expect(Tok::RParen, "`)`")?;
            return Ok(e);
        }
        let lhs_col = self.col();
        let lhs = self.term()?;
        let op = match self.peek() {
            Tok::EqEq => CompareOp::Eq,
            Tok::NotEq => CompareOp::Neq,
            Tok::Lt => CompareOp::Lt,
            Tok::Gt => CompareOp::Gt,
            _ => {
                let e = self.size(lhs, 1, lhs_col)?;
                if e.width() != 1 {
                    return Err(CondError { col: lhs_col, kind: CondErrorKind::NotBoolean(e.width()) });
                }
                return Ok(e);
            }
        };
        let op_col = self.col();
        self.bump();
        let rhs_col = self.col();
        let rhs = self.term()?;
        let (lhs, rhs) = match (lhs, rhs) {
            (Term::Sized(a), Term::Sized(b)) => {
                if a.width() != b.width() {
                    return Err(CondError {
                        col: op_col,
                        kind: CondErrorKind::WidthMismatch { lhs: a.width(), rhs: b.width() },
                    });
                }
                (a, b)
            }
            (Term::Sized(a), b) => {
                let w = a.width();
                (a, self.size(b, w, rhs_col)?)
            }
            (a, Term::Sized(b)) => {
                let w = b.width();
                (self.size(a, w, lhs_col)?, b)
            }
            (Term::Bare(a), Term::Bare(b)) => {
                let w = min_width(a.max(b));
                (CondExpr::Literal { width: w, value: a }, CondExpr::Literal { width: w, value: b })
            }
        };
        Ok(CondExpr::Compare { op, lhs: Box::new(lhs), rhs: Box::new(rhs) })
    }

    fn size(&self, t: Term, width: Width, col: usize) -> Result<CondExpr, CondError> {
        match t {
            Term::Sized(e) => Ok(e),
            Term::Bare(value) => {
                if value & !mask(width) != 0 {
                    return Err(CondError { col, kind: CondErrorKind::LiteralTooWide { value, width } });
                }
                Ok(CondExpr::Literal { width, value })
            }
        }
    }

    fn term(&mut self) -> Result<Term, CondError> {
        let col = self.col();
        match self.bump() {
            Tok::Sf => {
                self.expect(Tok::LParen, "`(` after `$sf`")?;
                let name = match self.bump() {
                    Tok::Ident(s) => s,
                    _ => return Err(CondError { col, kind: CondErrorKind::Syntax("expected scan field name".into()) }),
                };
                self.expect(Tok::Comma, "`,`")?;
                let wcol = self.col();
                let width = match self.bump() {
                    Tok::Int(w) if (1..=u64::from(MAX_WIDTH)).contains(&w) => w as Width,
                    Tok::Int(w) => return Err(CondError { col: wcol, kind: CondErrorKind::BadWidth(w) }),
                    _ => return Err(CondError { col: wcol, kind: CondErrorKind::Syntax("expected width".into()) }),
                };
                self.expect(Tok::RParen, "`)`")?;
                match self.fields.iter().find(|f| f.name == name) {
                    Some(f) if f.width != width => {
                        return Err(CondError {
                            col,
                            kind: CondErrorKind::Conflict { name, first: f.width, second: width },
                        })
                    }
                    Some(_) => {}
                    None => self.fields.push(ScanFieldDecl { name: name.clone(), width }),
                }
                Ok(Term::Sized(CondExpr::ScanField { name, width }))
            }
            Tok::Int(v) => Ok(Term::Bare(v)),
            Tok::Ident(s) if s == "UInt" && *self.peek() == Tok::Lt => {
                self.bump();
                let wcol = self.col();
                let width = match self.bump() {
                    Tok::Int(w) if (1..=u64::from(MAX_WIDTH)).contains(&w) => w as Width,
                    Tok::Int(w) => return Err(CondError { col: wcol, kind: CondErrorKind::BadWidth(w) }),
                    _ => return Err(CondError { col: wcol, kind: CondErrorKind::Syntax("expected width".into()) }),
                };
                self.expect(Tok::Gt, "`>`")?;
                self.expect(Tok::LParen, "`(`")?;
                let vcol = self.col();
                let value = match self.bump() {
                    Tok::Int(v) => v,
                    _ => return Err(CondError { col: vcol, kind: CondErrorKind::Syntax("expected literal value".into()) }),
                };
                self.expect(Tok::RParen, "`)`")?;
                if value & !mask(width) != 0 {
                    return Err(CondError { col, kind: CondErrorKind::LiteralTooWide { value, width } });
                }
                Ok(Term::Sized(CondExpr::Literal { width, value }))
            }
            Tok::Ident(first) => {
                let mut path = first;
                while *self.peek() == Tok::Dot {
                    self.bump();
                    match self.bump() {
                        Tok::Ident(s) => {
                            path.push('.');
                            path.push_str(&s);
                        }
                        _ => return self.fail(CondErrorKind::Syntax("expected identifier after `.`".into())),
                    }
                }
                let width = self
                    .scope
                    .signal_width(&path)
                    .ok_or_else(|| CondError { col, kind: CondErrorKind::Unresolved(path.clone()) })?;
                Ok(Term::Sized(CondExpr::Signal { path, width }))
            }
            Tok::Eof => Err(CondError { col, kind: CondErrorKind::Syntax("unexpected end of condition".into()) }),
            _ => Err(CondError { col, kind: CondErrorKind::Syntax("expected a signal, scan field or literal".into()) }),
        }
    }
}

fn min_width(v: u64) -> Width {
    (64 - v.leading_zeros()).max(1)
}

/// Parses `text` against the signals visible in `scope`.
///
/// Scan fields are returned in first-occurrence order, which fixes their
/// position in the conditioner's scan chain segment.
pub fn parse_condition(text: &str, scope: &dyn SignalScope) -> Result<(CondExpr, Vec<ScanFieldDecl>), CondError> {
    let mut p = Parser { toks: lex(text)?, at: 0, scope, fields: Vec::new() };
    let e = p.or()?;
    if *p.peek() != Tok::Eof {
        return p.fail(CondErrorKind::Syntax("unexpected trailing input".into()));
    }
    Ok((e, p.fields))
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum EvalError {
    #[error("no value bound for signal `{0}`")]
    MissingSignal(String),
    #[error("no value bound for scan field `{0}`")]
    MissingField(String),
}

/// Evaluates `e`; every operand is evaluated (no short circuit).
pub fn eval_condition(
    e: &CondExpr,
    signals: &HashMap<String, u64>,
    fields: &HashMap<String, u64>,
) -> Result<bool, EvalError> {
    Ok(value(e, signals, fields)? != 0)
}

fn value(e: &CondExpr, signals: &HashMap<String, u64>, fields: &HashMap<String, u64>) -> Result<u64, EvalError> {
    Ok(match e {
        CondExpr::ScanField { name, width } => {
            fields.get(name).copied().ok_or_else(|| EvalError::MissingField(name.clone()))? & mask(*width)
        }
        CondExpr::Signal { path, width } => {
            signals.get(path).copied().ok_or_else(|| EvalError::MissingSignal(path.clone()))? & mask(*width)
        }
        CondExpr::Literal { value, .. } => *value,
        CondExpr::Compare { op, lhs, rhs } => {
            let a = value(lhs, signals, fields)?;
            let b = value(rhs, signals, fields)?;
            op.apply(a, b) as u64
        }
        CondExpr::And(a, b) => {
            let x = value(a, signals, fields)?;
            let y = value(b, signals, fields)?;
            x & y & 1
        }
        CondExpr::Or(a, b) => {
            let x = value(a, signals, fields)?;
            let y = value(b, signals, fields)?;
            (x | y) & 1
        }
        CondExpr::Not(a) => !value(a, signals, fields)? & 1,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Sigs(Vec<(&'static str, Width)>);

    impl SignalScope for Sigs {
        fn signal_width(&self, path: &str) -> Option<Width> {
            self.0.iter().find(|(p, _)| *p == path).map(|(_, w)| *w)
        }
    }

    fn rocket() -> Sigs {
        Sigs(vec![("rf_waddr", 5), ("rf_wen", 1), ("X1", 8), ("X2", 8), ("b", 5), ("u.x", 3)])
    }

    fn map(kv: &[(&str, u64)]) -> HashMap<String, u64> {
        kv.iter().map(|(k, v)| (k.to_string(), *v)).collect()
    }

    #[test]
    fn two_field_disjunction() {
        let (e, decls) = parse_condition("($sf(t1,8) == X1) || ($sf(t2,8) == X2)", &rocket()).unwrap();
        assert_eq!(
            decls,
            vec![ScanFieldDecl { name: "t1".into(), width: 8 }, ScanFieldDecl { name: "t2".into(), width: 8 }]
        );
        let sf = |n: &str| Box::new(CondExpr::ScanField { name: n.into(), width: 8 });
        let sig = |n: &str| Box::new(CondExpr::Signal { path: n.into(), width: 8 });
        assert_eq!(
            e,
            CondExpr::Or(
                Box::new(CondExpr::Compare { op: CompareOp::Eq, lhs: sf("t1"), rhs: sig("X1") }),
                Box::new(CondExpr::Compare { op: CompareOp::Eq, lhs: sf("t2"), rhs: sig("X2") }),
            )
        );
        let hit = eval_condition(&e, &map(&[("X1", 3), ("X2", 0)]), &map(&[("t1", 3), ("t2", 9)])).unwrap();
        assert!(hit);
    }

    #[test]
    fn register_file_condition() {
        let (e, decls) = parse_condition("($sf(targetAddr,5) == rf_waddr) && rf_wen", &rocket()).unwrap();
        assert_eq!(decls, vec![ScanFieldDecl { name: "targetAddr".into(), width: 5 }]);
        assert_eq!(e.signals(), vec![("rf_waddr", 5), ("rf_wen", 1)]);
        let fields = map(&[("targetAddr", 15)]);
        assert!(!eval_condition(&e, &map(&[("rf_waddr", 15), ("rf_wen", 0)]), &fields).unwrap());
        assert!(eval_condition(&e, &map(&[("rf_waddr", 15), ("rf_wen", 1)]), &fields).unwrap());
    }

    #[test]
    fn width_mismatch_rejected() {
        let err = parse_condition("$sf(a,4) == b", &rocket()).unwrap_err();
        assert_eq!(err.kind, CondErrorKind::WidthMismatch { lhs: 4, rhs: 5 });
        assert_eq!(err.col, 10);
    }

    #[test]
    fn conflicting_redeclaration() {
        let err = parse_condition("$sf(a,5) == b && $sf(a,3) == u.x", &rocket()).unwrap_err();
        assert!(matches!(err.kind, CondErrorKind::Conflict { .. }));
        let (_, decls) = parse_condition("$sf(a,5) == b || $sf(a,5) > rf_waddr", &rocket()).unwrap();
        assert_eq!(decls.len(), 1);
    }

    #[test]
    fn unresolved_and_non_boolean() {
        assert!(matches!(parse_condition("zz", &rocket()).unwrap_err().kind, CondErrorKind::Unresolved(_)));
        assert_eq!(parse_condition("b && rf_wen", &rocket()).unwrap_err().kind, CondErrorKind::NotBoolean(5));
    }

    #[test]
    fn precedence_not_binds_tighter_than_and_than_or() {
        let (e, _) = parse_condition("!rf_wen && rf_wen || rf_wen", &rocket()).unwrap();
        assert!(matches!(e, CondExpr::Or(ref a, _) if matches!(**a, CondExpr::And(ref n, _) if matches!(**n, CondExpr::Not(_)))));
    }

    #[test]
    fn bare_literals_take_partner_width() {
        let (e, _) = parse_condition("rf_waddr > 0x1e", &rocket()).unwrap();
        assert!(matches!(e, CondExpr::Compare { ref rhs, .. } if **rhs == CondExpr::Literal { width: 5, value: 30 }));
        let err = parse_condition("rf_waddr == 32", &rocket()).unwrap_err();
        assert!(matches!(err.kind, CondErrorKind::LiteralTooWide { .. }));
    }

    #[test]
    fn hierarchical_paths_resolve() {
        let (e, _) = parse_condition("u.x != UInt<3>(2)", &rocket()).unwrap();
        assert_eq!(e.signals(), vec![("u.x", 3)]);
    }

    #[test]
    fn missing_binding_is_error() {
        let (e, _) = parse_condition("rf_wen", &rocket()).unwrap();
        assert_eq!(
            eval_condition(&e, &HashMap::new(), &HashMap::new()),
            Err(EvalError::MissingSignal("rf_wen".into()))
        );
    }

    #[test]
    fn exhaustive_address_sweep_hits_once() {
        let (e, _) = parse_condition("($sf(targetAddr,5) == rf_waddr) && rf_wen", &rocket()).unwrap();
        for target in 0..32u64 {
            let fields = map(&[("targetAddr", target)]);
            let hits = (0..32u64)
                .filter(|&a| eval_condition(&e, &map(&[("rf_waddr", a), ("rf_wen", 1)]), &fields).unwrap())
                .count();
            assert_eq!(hits, 1);
        }
    }
}
