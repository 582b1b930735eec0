//! Data model for the NIR structural dialect.

use std::fmt;

/// Bit width of a signal or expression.
pub type Width = u32;

/// Widest value the dialect can carry; all values are `u64`.
pub const MAX_WIDTH: Width = 64;

/// All-ones mask for `width` bits.
pub fn mask(width: Width) -> u64 {
    if width >= 64 {
        u64::MAX
    } else {
        (1u64 << width) - 1
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Circuit {
    pub name: String,
    pub modules: Vec<ModuleDef>,
    pub top: String,
}

impl Circuit {
    pub fn module(&self, name: &str) -> Option<&ModuleDef> {
        self.modules.iter().find(|m| m.name == name)
    }

    pub fn module_mut(&mut self, name: &str) -> Option<&mut ModuleDef> {
        self.modules.iter_mut().find(|m| m.name == name)
    }

    pub fn top_module(&self) -> Option<&ModuleDef> {
        self.module(&self.top)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Direction {
    Input,
    Output,
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Direction::Input => "input",
            Direction::Output => "output",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Port {
    pub name: String,
    pub direction: Direction,
    pub width: Width,
}

impl Port {
    pub fn input(name: impl Into<String>, width: Width) -> Self {
        Port { name: name.into(), direction: Direction::Input, width }
    }

    pub fn output(name: impl Into<String>, width: Width) -> Self {
        Port { name: name.into(), direction: Direction::Output, width }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Decl {
    Wire { name: String, width: Width },
    Reg { name: String, width: Width, init: u64 },
    /// Synchronous-write, combinational-read black box with one port of each kind.
    Mem { name: String, width: Width, depth: u32 },
    Instance { name: String, module: String },
}

impl Decl {
    pub fn name(&self) -> &str {
        match self {
            Decl::Wire { name, .. }
            | Decl::Reg { name, .. }
            | Decl::Mem { name, .. }
            | Decl::Instance { name, .. } => name,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ModuleDef {
    pub name: String,
    pub ports: Vec<Port>,
    pub decls: Vec<Decl>,
    pub stmts: Vec<Stmt>,
}

impl ModuleDef {
    pub fn new(name: impl Into<String>) -> Self {
        ModuleDef { name: name.into(), ports: Vec::new(), decls: Vec::new(), stmts: Vec::new() }
    }

    pub fn port(&self, name: &str) -> Option<&Port> {
        self.ports.iter().find(|p| p.name == name)
    }

    pub fn decl(&self, name: &str) -> Option<&Decl> {
        self.decls.iter().find(|d| d.name() == name)
    }

    /// True when `name` is already taken by a port or declaration.
    pub fn has_name(&self, name: &str) -> bool {
        self.port(name).is_some() || self.decl(name).is_some()
    }

    /// Instance declarations as `(instance, module)` pairs.
    pub fn instances(&self) -> impl Iterator<Item = (&str, &str)> {
        self.decls.iter().filter_map(|d| match d {
            Decl::Instance { name, module } => Some((name.as_str(), module.as_str())),
            _ => None,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum UnaryOp {
    Not,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BinaryOp {
    And,
    Or,
    Xor,
    Add,
    Sub,
    Eq,
    Neq,
    Lt,
    Gt,
    Shl,
    Shr,
    Cat,
}

impl BinaryOp {
    pub const ALL: [BinaryOp; 12] = [
        BinaryOp::And,
        BinaryOp::Or,
        BinaryOp::Xor,
        BinaryOp::Add,
        BinaryOp::Sub,
        BinaryOp::Eq,
        BinaryOp::Neq,
        BinaryOp::Lt,
        BinaryOp::Gt,
        BinaryOp::Shl,
        BinaryOp::Shr,
        BinaryOp::Cat,
    ];

    pub fn keyword(self) -> &'static str {
        match self {
            BinaryOp::And => "and",
            BinaryOp::Or => "or",
            BinaryOp::Xor => "xor",
            BinaryOp::Add => "add",
            BinaryOp::Sub => "sub",
            BinaryOp::Eq => "eq",
            BinaryOp::Neq => "neq",
            BinaryOp::Lt => "lt",
            BinaryOp::Gt => "gt",
            BinaryOp::Shl => "shl",
            BinaryOp::Shr => "shr",
            BinaryOp::Cat => "cat",
        }
    }

    pub fn from_keyword(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|op| op.keyword() == s)
    }

    pub fn is_comparison(self) -> bool {
        matches!(self, BinaryOp::Eq | BinaryOp::Neq | BinaryOp::Lt | BinaryOp::Gt)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Expr {
    Literal { width: Width, value: u64 },
    Ref(String),
    Mux(Box<Expr>, Box<Expr>, Box<Expr>),
    Unary(UnaryOp, Box<Expr>),
    Binary(BinaryOp, Box<Expr>, Box<Expr>),
    Bits { arg: Box<Expr>, hi: Width, lo: Width },
}

impl Expr {
    pub fn lit(width: Width, value: u64) -> Self {
        Expr::Literal { width, value }
    }

    pub fn r(path: impl Into<String>) -> Self {
        Expr::Ref(path.into())
    }

    pub fn mux(cond: Expr, a: Expr, b: Expr) -> Self {
        Expr::Mux(Box::new(cond), Box::new(a), Box::new(b))
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(arg: Expr) -> Self {
        Expr::Unary(UnaryOp::Not, Box::new(arg))
    }

    pub fn bin(op: BinaryOp, a: Expr, b: Expr) -> Self {
        Expr::Binary(op, Box::new(a), Box::new(b))
    }

    pub fn and(a: Expr, b: Expr) -> Self {
        Self::bin(BinaryOp::And, a, b)
    }

    pub fn or(a: Expr, b: Expr) -> Self {
        Self::bin(BinaryOp::Or, a, b)
    }

    pub fn xor(a: Expr, b: Expr) -> Self {
        Self::bin(BinaryOp::Xor, a, b)
    }

    pub fn cat(a: Expr, b: Expr) -> Self {
        Self::bin(BinaryOp::Cat, a, b)
    }

    pub fn bits(arg: Expr, hi: Width, lo: Width) -> Self {
        Expr::Bits { arg: Box::new(arg), hi, lo }
    }

    /// Calls `f` on every referenced path, left to right.
    pub fn visit_refs<'a>(&'a self, f: &mut impl FnMut(&'a str)) {
        match self {
            Expr::Literal { .. } => {}
            Expr::Ref(p) => f(p),
            Expr::Mux(c, a, b) => {
                c.visit_refs(f);
                a.visit_refs(f);
                b.visit_refs(f);
            }
            Expr::Unary(_, a) | Expr::Bits { arg: a, .. } => a.visit_refs(f),
            Expr::Binary(_, a, b) => {
                a.visit_refs(f);
                b.visit_refs(f);
            }
        }
    }

    /// Rewrites every reference in place.
    pub fn map_refs(&mut self, f: &mut impl FnMut(&mut String)) {
        match self {
            Expr::Literal { .. } => {}
            Expr::Ref(p) => f(p),
            Expr::Mux(c, a, b) => {
                c.map_refs(f);
                a.map_refs(f);
                b.map_refs(f);
            }
            Expr::Unary(_, a) | Expr::Bits { arg: a, .. } => a.map_refs(f),
            Expr::Binary(_, a, b) => {
                a.map_refs(f);
                b.map_refs(f);
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Stmt {
    Connect { lhs: String, rhs: Expr },
    RegNext { reg: String, rhs: Expr },
    MemRead { dst: String, mem: String, addr: Expr },
    MemWrite { mem: String, addr: Expr, data: Expr, en: Expr },
}

impl Stmt {
    pub fn connect(lhs: impl Into<String>, rhs: Expr) -> Self {
        Stmt::Connect { lhs: lhs.into(), rhs }
    }

    pub fn reg_next(reg: impl Into<String>, rhs: Expr) -> Self {
        Stmt::RegNext { reg: reg.into(), rhs }
    }

    /// The signal this statement drives, if any (memory writes drive none).
    pub fn driven(&self) -> Option<&str> {
        match self {
            Stmt::Connect { lhs, .. } => Some(lhs),
            Stmt::RegNext { reg, .. } => Some(reg),
            Stmt::MemRead { dst, .. } => Some(dst),
            Stmt::MemWrite { .. } => None,
        }
    }

    pub fn exprs(&self) -> Vec<&Expr> {
        match self {
            Stmt::Connect { rhs, .. } | Stmt::RegNext { rhs, .. } => vec![rhs],
            Stmt::MemRead { addr, .. } => vec![addr],
            Stmt::MemWrite { addr, data, en, .. } => vec![addr, data, en],
        }
    }

    pub fn exprs_mut(&mut self) -> Vec<&mut Expr> {
        match self {
            Stmt::Connect { rhs, .. } | Stmt::RegNext { rhs, .. } => vec![rhs],
            Stmt::MemRead { addr, .. } => vec![addr],
            Stmt::MemWrite { addr, data, en, .. } => vec![addr, data, en],
        }
    }
}
