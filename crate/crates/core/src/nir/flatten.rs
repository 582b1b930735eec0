//! Hierarchy flattening into index-addressed signal tables.
//!
//! Instance signals are prefixed with their instance path (`a.b.y`). A child
//! port `p` of instance `u` becomes the flat signal `u.p`, which is exactly the
//! path the parent uses to refer to it, so parent and child agree on names
//! without any port binding step.

use std::collections::HashMap;

use petgraph::algo::tarjan_scc;
use petgraph::graph::{DiGraph, NodeIndex};

use super::ast::{mask, BinaryOp, Circuit, Decl, Direction, Expr, ModuleDef, Stmt, UnaryOp, Width};
use super::diag::{DiagCode, Diagnostic, Site};
use super::scope::{binary_width, ModuleScope};

pub type SignalId = usize;
pub type MemId = usize;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SignalKind {
    /// Top-level input.
    Input,
    /// Top-level output.
    Output,
    /// Wires and the ports of non-top instances.
    Wire,
    Reg { init: u64 },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FlatSignal {
    pub path: String,
    pub width: Width,
    pub kind: SignalKind,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FlatMem {
    pub path: String,
    pub width: Width,
    pub depth: u32,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FlatInstance {
    pub path: String,
    pub module: String,
}

/// Expression over flat signal ids with widths resolved for evaluation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FlatExpr {
    Const(u64),
    Sig(SignalId),
    Mux(Box<FlatExpr>, Box<FlatExpr>, Box<FlatExpr>),
    Not { width: Width, arg: Box<FlatExpr> },
    Binary { op: BinaryOp, width: Width, rhs_width: Width, lhs: Box<FlatExpr>, rhs: Box<FlatExpr> },
    Bits { arg: Box<FlatExpr>, hi: Width, lo: Width },
}

impl FlatExpr {
    pub fn eval(&self, values: &[u64]) -> u64 {
        match self {
            FlatExpr::Const(v) => *v,
            FlatExpr::Sig(id) => values[*id],
            FlatExpr::Mux(c, a, b) => {
                if c.eval(values) != 0 {
                    a.eval(values)
                } else {
                    b.eval(values)
                }
            }
            FlatExpr::Not { width, arg } => !arg.eval(values) & mask(*width),
            FlatExpr::Binary { op, width, rhs_width, lhs, rhs } => {
                let a = lhs.eval(values);
                let b = rhs.eval(values);
                match op {
                    BinaryOp::And => a & b,
                    BinaryOp::Or => a | b,
                    BinaryOp::Xor => a ^ b,
                    BinaryOp::Add => a.wrapping_add(b) & mask(*width),
                    BinaryOp::Sub => a.wrapping_sub(b) & mask(*width),
                    BinaryOp::Eq => (a == b) as u64,
                    BinaryOp::Neq => (a != b) as u64,
                    BinaryOp::Lt => (a < b) as u64,
                    BinaryOp::Gt => (a > b) as u64,
                    BinaryOp::Shl => {
                        if b >= 64 {
                            0
                        } else {
                            (a << b) & mask(*width)
                        }
                    }
                    BinaryOp::Shr => {
                        if b >= 64 {
                            0
                        } else {
                            a >> b
                        }
                    }
                    BinaryOp::Cat => (a << rhs_width) | b,
                }
            }
            FlatExpr::Bits { arg, hi, lo } => (arg.eval(values) >> lo) & mask(hi - lo + 1),
        }
    }

    pub fn visit_signals(&self, f: &mut impl FnMut(SignalId)) {
        match self {
            FlatExpr::Const(_) => {}
            FlatExpr::Sig(id) => f(*id),
            FlatExpr::Mux(c, a, b) => {
                c.visit_signals(f);
                a.visit_signals(f);
                b.visit_signals(f);
            }
            FlatExpr::Not { arg, .. } | FlatExpr::Bits { arg, .. } => arg.visit_signals(f),
            FlatExpr::Binary { lhs, rhs, .. } => {
                lhs.visit_signals(f);
                rhs.visit_signals(f);
            }
        }
    }
}

/// A combinational assignment: `Connect` or the read port of a memory.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CombAssign {
    Expr { dst: SignalId, expr: FlatExpr },
    MemRead { dst: SignalId, mem: MemId, addr: FlatExpr },
}

impl CombAssign {
    pub fn dst(&self) -> SignalId {
        match self {
            CombAssign::Expr { dst, .. } | CombAssign::MemRead { dst, .. } => *dst,
        }
    }

    fn deps(&self) -> &FlatExpr {
        match self {
            CombAssign::Expr { expr, .. } => expr,
            CombAssign::MemRead { addr, .. } => addr,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RegUpdate {
    pub reg: SignalId,
    pub expr: FlatExpr,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MemWrite {
    pub mem: MemId,
    pub addr: FlatExpr,
    pub data: FlatExpr,
    pub en: FlatExpr,
}

#[derive(Debug, Clone, Default)]
pub struct FlatNetlist {
    pub signals: Vec<FlatSignal>,
    pub index: HashMap<String, SignalId>,
    pub mems: Vec<FlatMem>,
    pub mem_index: HashMap<String, MemId>,
    pub instances: Vec<FlatInstance>,
    /// Combinational assignments in source order (see [`FlatNetlist::comb_order`]).
    pub comb: Vec<CombAssign>,
    pub regs: Vec<RegUpdate>,
    pub writes: Vec<MemWrite>,
}

impl FlatNetlist {
    pub fn signal(&self, path: &str) -> Option<SignalId> {
        self.index.get(path).copied()
    }

    pub fn inputs(&self) -> impl Iterator<Item = SignalId> + '_ {
        self.signals.iter().enumerate().filter(|(_, s)| s.kind == SignalKind::Input).map(|(i, _)| i)
    }

    pub fn outputs(&self) -> impl Iterator<Item = SignalId> + '_ {
        self.signals.iter().enumerate().filter(|(_, s)| s.kind == SignalKind::Output).map(|(i, _)| i)
    }

    /// Total register bits (memories excluded).
    pub fn state_bits(&self) -> u64 {
        self.signals
            .iter()
            .filter(|s| matches!(s.kind, SignalKind::Reg { .. }))
            .map(|s| u64::from(s.width))
            .sum()
    }

    /// Indices into `comb` in dependency order, or the signal sets of every
    /// combinational cycle.
    pub fn comb_order(&self) -> Result<Vec<usize>, Vec<Vec<SignalId>>> {
        let mut graph: DiGraph<SignalId, ()> = DiGraph::with_capacity(self.signals.len(), self.comb.len());
        let nodes: Vec<NodeIndex> = (0..self.signals.len()).map(|i| graph.add_node(i)).collect();
        let mut driver_of: Vec<Option<usize>> = vec![None; self.signals.len()];
        for (i, a) in self.comb.iter().enumerate() {
            let dst = a.dst();
            driver_of[dst] = Some(i);
            a.deps().visit_signals(&mut |src| {
                graph.add_edge(nodes[src], nodes[dst], ());
            });
        }
        // tarjan_scc yields components in reverse topological order.
        let sccs = tarjan_scc(&graph);
        let mut cycles = Vec::new();
        let mut order = Vec::with_capacity(self.comb.len());
        for scc in sccs.iter().rev() {
            let self_loop = scc.len() == 1 && graph.contains_edge(scc[0], scc[0]);
            if scc.len() > 1 || self_loop {
                let mut sigs: Vec<SignalId> = scc.iter().map(|n| graph[*n]).collect();
                sigs.sort_unstable();
                cycles.push(sigs);
                continue;
            }
            if let Some(i) = driver_of[graph[scc[0]]] {
                order.push(i);
            }
        }
        if cycles.is_empty() {
            Ok(order)
        } else {
            Err(cycles)
        }
    }
}

/// Flattens the hierarchy below the top module.
///
/// The circuit must already pass per-module resolution and width checks.
pub fn flatten(c: &Circuit) -> Result<FlatNetlist, Diagnostic> {
    let top = c
        .top_module()
        .ok_or_else(|| Diagnostic::new(DiagCode::Unresolved, format!("top module `{}` not found", c.top)))?;
    let mut net = FlatNetlist::default();
    let mut stack = Vec::new();
    collect_signals(c, top, "", true, &mut net, &mut stack)?;
    collect_stmts(c, top, "", &mut net)?;
    Ok(net)
}

fn collect_signals<'a>(
    c: &'a Circuit,
    m: &'a ModuleDef,
    prefix: &str,
    is_top: bool,
    net: &mut FlatNetlist,
    stack: &mut Vec<&'a str>,
) -> Result<(), Diagnostic> {
    if stack.contains(&m.name.as_str()) {
        return Err(Diagnostic::new(
            DiagCode::Unresolved,
            format!("recursive instantiation of module `{}`", m.name),
        )
        .at(&m.name, Site::Module));
    }
    stack.push(&m.name);
    for p in &m.ports {
        let kind = match (is_top, p.direction) {
            (true, Direction::Input) => SignalKind::Input,
            (true, Direction::Output) => SignalKind::Output,
            (false, _) => SignalKind::Wire,
        };
        add_signal(net, format!("{prefix}{}", p.name), p.width, kind);
    }
    for (i, d) in m.decls.iter().enumerate() {
        match d {
            Decl::Wire { name, width } => add_signal(net, format!("{prefix}{name}"), *width, SignalKind::Wire),
            Decl::Reg { name, width, init } => {
                add_signal(net, format!("{prefix}{name}"), *width, SignalKind::Reg { init: *init })
            }
            Decl::Mem { name, width, depth } => {
                let path = format!("{prefix}{name}");
                net.mem_index.insert(path.clone(), net.mems.len());
                net.mems.push(FlatMem { path, width: *width, depth: *depth });
            }
            Decl::Instance { name, module } => {
                let child = c.module(module).ok_or_else(|| {
                    Diagnostic::new(DiagCode::Unresolved, format!("unknown module `{module}`"))
                        .at(&m.name, Site::Decl(i))
                })?;
                let path = format!("{prefix}{name}");
                net.instances.push(FlatInstance { path: path.clone(), module: module.clone() });
                collect_signals(c, child, &format!("{path}."), false, net, stack)?;
            }
        }
    }
    stack.pop();
    Ok(())
}

fn add_signal(net: &mut FlatNetlist, path: String, width: Width, kind: SignalKind) {
    net.index.insert(path.clone(), net.signals.len());
    net.signals.push(FlatSignal { path, width, kind });
}

fn collect_stmts(c: &Circuit, m: &ModuleDef, prefix: &str, net: &mut FlatNetlist) -> Result<(), Diagnostic> {
    let scope = ModuleScope::new(c, m);
    let lower = Lowerer { scope: &scope, prefix, net_index: &net.index };
    let mut comb = Vec::new();
    let mut regs = Vec::new();
    let mut writes = Vec::new();
    for (i, s) in m.stmts.iter().enumerate() {
        let site = |d: Diagnostic| d.at(&m.name, Site::Stmt(i));
        match s {
            Stmt::Connect { lhs, rhs } => {
                let dst = lower.signal(lhs).map_err(site)?;
                comb.push(CombAssign::Expr { dst, expr: lower.expr(rhs).map_err(site)? });
            }
            Stmt::RegNext { reg, rhs } => {
                let reg = lower.signal(reg).map_err(site)?;
                regs.push(RegUpdate { reg, expr: lower.expr(rhs).map_err(site)? });
            }
            Stmt::MemRead { dst, mem, addr } => {
                let dst = lower.signal(dst).map_err(site)?;
                let mem = mem_id(net, prefix, mem).map_err(site)?;
                comb.push(CombAssign::MemRead { dst, mem, addr: lower.expr(addr).map_err(site)? });
            }
            Stmt::MemWrite { mem, addr, data, en } => {
                let mem = mem_id(net, prefix, mem).map_err(site)?;
                writes.push(MemWrite {
                    mem,
                    addr: lower.expr(addr).map_err(site)?,
                    data: lower.expr(data).map_err(site)?,
                    en: lower.expr(en).map_err(site)?,
                });
            }
        }
    }
    net.comb.extend(comb);
    net.regs.extend(regs);
    net.writes.extend(writes);
    for (name, module) in m.instances() {
        let child = c
            .module(module)
            .ok_or_else(|| Diagnostic::new(DiagCode::Unresolved, format!("unknown module `{module}`")))?;
        collect_stmts(c, child, &format!("{prefix}{name}."), net)?;
    }
    Ok(())
}

fn mem_id(net: &FlatNetlist, prefix: &str, mem: &str) -> Result<MemId, Diagnostic> {
    net.mem_index
        .get(&format!("{prefix}{mem}"))
        .copied()
        .ok_or_else(|| Diagnostic::new(DiagCode::Unresolved, format!("unknown memory `{mem}`")))
}

struct Lowerer<'s, 'a> {
    scope: &'s ModuleScope<'a>,
    prefix: &'s str,
    net_index: &'s HashMap<String, SignalId>,
}

impl Lowerer<'_, '_> {
    fn signal(&self, path: &str) -> Result<SignalId, Diagnostic> {
        self.net_index
            .get(&format!("{}{path}", self.prefix))
            .copied()
            .ok_or_else(|| Diagnostic::new(DiagCode::Unresolved, format!("unresolved reference `{path}`")))
    }

    fn width(&self, e: &Expr) -> Result<Width, Diagnostic> {
        self.scope.expr_width(e).map_err(|(code, msg)| Diagnostic::new(code, msg))
    }

    fn expr(&self, e: &Expr) -> Result<FlatExpr, Diagnostic> {
        Ok(match e {
            Expr::Literal { value, .. } => FlatExpr::Const(*value),
            Expr::Ref(p) => FlatExpr::Sig(self.signal(p)?),
            Expr::Mux(c, a, b) => {
                FlatExpr::Mux(Box::new(self.expr(c)?), Box::new(self.expr(a)?), Box::new(self.expr(b)?))
            }
            Expr::Unary(UnaryOp::Not, a) => FlatExpr::Not { width: self.width(a)?, arg: Box::new(self.expr(a)?) },
            Expr::Binary(op, a, b) => {
                let wa = self.width(a)?;
                let wb = self.width(b)?;
                let width = binary_width(*op, wa, wb).map_err(|(code, msg)| Diagnostic::new(code, msg))?;
                FlatExpr::Binary {
                    op: *op,
                    width,
                    rhs_width: wb,
                    lhs: Box::new(self.expr(a)?),
                    rhs: Box::new(self.expr(b)?),
                }
            }
            Expr::Bits { arg, hi, lo } => FlatExpr::Bits { arg: Box::new(self.expr(arg)?), hi: *hi, lo: *lo },
        })
    }
}
