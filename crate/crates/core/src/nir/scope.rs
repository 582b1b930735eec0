//! Name resolution and width computation inside one module.

use std::collections::HashMap;

use super::ast::{mask, BinaryOp, Circuit, Decl, Direction, Expr, ModuleDef, Width, MAX_WIDTH};
use super::diag::DiagCode;

/// What a path inside a module refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Resolved<'a> {
    Port { direction: Direction, width: Width },
    Wire { width: Width },
    Reg { width: Width, init: u64 },
    Mem { width: Width, depth: u32 },
    /// A port of a child instance, seen from the parent.
    InstancePort { instance: &'a str, direction: Direction, width: Width },
    Instance { module: &'a str },
}

impl Resolved<'_> {
    /// Width when the symbol can be read as a value.
    pub fn value_width(&self) -> Option<Width> {
        match *self {
            Resolved::Port { width, .. }
            | Resolved::Wire { width }
            | Resolved::Reg { width, .. }
            | Resolved::InstancePort { width, .. } => Some(width),
            Resolved::Mem { .. } | Resolved::Instance { .. } => None,
        }
    }
}

/// Anything that can tell the width of a readable signal path.
pub trait SignalScope {
    fn signal_width(&self, path: &str) -> Option<Width>;
}

pub struct ModuleScope<'a> {
    circuit: &'a Circuit,
    module: &'a ModuleDef,
    names: HashMap<&'a str, Resolved<'a>>,
}

impl<'a> ModuleScope<'a> {
    pub fn new(circuit: &'a Circuit, module: &'a ModuleDef) -> Self {
        let mut names = HashMap::new();
        for p in &module.ports {
            names
                .entry(p.name.as_str())
                .or_insert(Resolved::Port { direction: p.direction, width: p.width });
        }
        for d in &module.decls {
            let r = match d {
                Decl::Wire { width, .. } => Resolved::Wire { width: *width },
                Decl::Reg { width, init, .. } => Resolved::Reg { width: *width, init: *init },
                Decl::Mem { width, depth, .. } => Resolved::Mem { width: *width, depth: *depth },
                Decl::Instance { module, .. } => Resolved::Instance { module },
            };
            names.entry(d.name()).or_insert(r);
        }
        ModuleScope { circuit, module, names }
    }

    pub fn module(&self) -> &'a ModuleDef {
        self.module
    }

    pub fn resolve(&self, path: &str) -> Option<Resolved<'a>> {
        match path.split_once('.') {
            None => self.names.get(path).copied(),
            Some((inst, port)) => {
                if port.contains('.') {
                    return None;
                }
                let (instance, module) = self.module.decls.iter().find_map(|d| match d {
                    Decl::Instance { name, module } if name == inst => {
                        Some((name.as_str(), module.as_str()))
                    }
                    _ => None,
                })?;
                let child = self.circuit.module(module)?;
                let p = child.port(port)?;
                Some(Resolved::InstancePort { instance, direction: p.direction, width: p.width })
            }
        }
    }

    /// Static width of `e`, or the first width/resolution problem found.
    pub fn expr_width(&self, e: &Expr) -> Result<Width, (DiagCode, String)> {
        match e {
            Expr::Literal { width, value } => {
                if *width == 0 || *width > MAX_WIDTH {
                    return Err((DiagCode::Width, format!("literal width {width} out of range 1..=64")));
                }
                if *value & !mask(*width) != 0 {
                    return Err((
                        DiagCode::Width,
                        format!("literal {value} does not fit in UInt<{width}>"),
                    ));
                }
                Ok(*width)
            }
            Expr::Ref(p) => match self.resolve(p) {
                Some(r) => r.value_width().ok_or_else(|| {
                    (DiagCode::Unresolved, format!("`{p}` is not a readable signal"))
                }),
                None => Err((DiagCode::Unresolved, format!("unresolved reference `{p}`"))),
            },
            Expr::Mux(c, a, b) => {
                let wc = self.expr_width(c)?;
                if wc != 1 {
                    return Err((
                        DiagCode::Width,
                        format!("mux condition must be UInt<1>, found UInt<{wc}>"),
                    ));
                }
                Ok(self.expr_width(a)?.max(self.expr_width(b)?))
            }
            Expr::Unary(_, a) => self.expr_width(a),
            Expr::Binary(op, a, b) => {
                let wa = self.expr_width(a)?;
                let wb = self.expr_width(b)?;
                binary_width(*op, wa, wb)
            }
            Expr::Bits { arg, hi, lo } => {
                let w = self.expr_width(arg)?;
                if hi < lo || *hi >= w {
                    return Err((
                        DiagCode::Width,
                        format!("bits({hi}, {lo}) out of range for UInt<{w}>"),
                    ));
                }
                Ok(hi - lo + 1)
            }
        }
    }
}

impl SignalScope for ModuleScope<'_> {
    fn signal_width(&self, path: &str) -> Option<Width> {
        self.resolve(path).and_then(|r| r.value_width())
    }
}

/// Result width of a binary operator given operand widths.
pub fn binary_width(op: BinaryOp, wa: Width, wb: Width) -> Result<Width, (DiagCode, String)> {
    Ok(match op {
        BinaryOp::And | BinaryOp::Or | BinaryOp::Xor | BinaryOp::Add | BinaryOp::Sub => wa.max(wb),
        BinaryOp::Eq | BinaryOp::Neq | BinaryOp::Lt | BinaryOp::Gt => 1,
        BinaryOp::Shl | BinaryOp::Shr => wa,
        BinaryOp::Cat => {
            let w = wa + wb;
            if w > MAX_WIDTH {
                return Err((
                    DiagCode::Width,
                    format!("cat of UInt<{wa}> and UInt<{wb}> exceeds {MAX_WIDTH} bits"),
                ));
            }
            w
        }
    })
}
