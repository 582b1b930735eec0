//! NIR templates for conditioners and injectors.
//!
//! Scan fields are registers named `sf_<field>`, declared in chain order. The
//! field at index 0 sits next to the component's `scan_out`; while `scan_en`
//! is high every field shifts one bit toward it.

use crate::cond::{CompareOp, CondExpr, ScanFieldDecl};
use crate::nir::{BinaryOp, Decl, Expr, ModuleDef, Port, Stmt, Width};

use super::{InjectorKind, IS_ACTIVE, MASK, SEED, START_CYCLE, DURATION, STUCK_VALUE, TAPS_32, THRESHOLD};

pub const PORT_IN: &str = "in";
pub const PORT_OUT: &str = "out";
pub const PORT_GLOBAL_EN: &str = "global_en";
pub const PORT_SCAN_EN: &str = "scan_en";
pub const PORT_SCAN_IN: &str = "scan_in";
pub const PORT_SCAN_OUT: &str = "scan_out";
/// Buffered, gated enable from a conditioner to its injector.
pub const PORT_EN: &str = "en";
pub const PORT_FIRE: &str = "fire";
pub const ENABLE_BUFFER: &str = "en_buf";
const FIELD_PREFIX: &str = "sf_";

pub fn field_reg(field: &str) -> String {
    format!("{FIELD_PREFIX}{field}")
}

pub fn sink_port(index: usize) -> String {
    format!("sink_{index}")
}

/// Scan fields of a generated component module, in chain order.
pub fn scan_fields(m: &ModuleDef) -> Vec<(String, Width)> {
    m.decls
        .iter()
        .filter_map(|d| match d {
            Decl::Reg { name, width, .. } => name.strip_prefix(FIELD_PREFIX).map(|f| (f.to_string(), *width)),
            _ => None,
        })
        .collect()
}

fn scan_ports(m: &mut ModuleDef) {
    m.ports.push(Port::input(PORT_GLOBAL_EN, 1));
    m.ports.push(Port::input(PORT_SCAN_EN, 1));
    m.ports.push(Port::input(PORT_SCAN_IN, 1));
    m.ports.push(Port::output(PORT_SCAN_OUT, 1));
}

/// Declares the field registers and their shift logic.
fn scan_fields_logic(m: &mut ModuleDef, fields: &[(String, Width)]) {
    for (name, width) in fields {
        m.decls.push(Decl::Reg { name: field_reg(name), width: *width, init: 0 });
    }
    for (i, (name, width)) in fields.iter().enumerate() {
        let reg = field_reg(name);
        let incoming = match fields.get(i + 1) {
            Some((next, _)) => Expr::bits(Expr::r(field_reg(next)), 0, 0),
            None => Expr::r(PORT_SCAN_IN),
        };
        let shifted = if *width == 1 { incoming } else { Expr::cat(incoming, Expr::bits(Expr::r(&reg), width - 1, 1)) };
        m.stmts.push(Stmt::reg_next(&reg, Expr::mux(Expr::r(PORT_SCAN_EN), shifted, Expr::r(&reg))));
    }
    m.stmts.push(Stmt::connect(PORT_SCAN_OUT, Expr::bits(Expr::r(field_reg(&fields[0].0)), 0, 0)));
}

/// Conditioner with one sink port per distinct condition signal, in order.
pub fn conditioner_module(name: &str, cond: &CondExpr, fields: &[ScanFieldDecl]) -> ModuleDef {
    let mut m = ModuleDef::new(name);
    scan_ports(&mut m);
    let sinks = cond.signals();
    for (i, (_, width)) in sinks.iter().enumerate() {
        m.ports.push(Port::input(sink_port(i), *width));
    }
    m.ports.push(Port::output(PORT_FIRE, 1));

    let mut layout = vec![(IS_ACTIVE.to_string(), 1)];
    layout.extend(fields.iter().map(|f| (f.name.clone(), f.width)));
    scan_fields_logic(&mut m, &layout);

    m.decls.push(Decl::Reg { name: ENABLE_BUFFER.into(), width: 1, init: 0 });
    let sink_of = |path: &str| sinks.iter().position(|(p, _)| *p == path).map(sink_port).expect("signal collected");
    let gate = Expr::and(Expr::r(field_reg(IS_ACTIVE)), lower_condition(cond, &sink_of));
    m.stmts.push(Stmt::reg_next(ENABLE_BUFFER, Expr::and(Expr::r(PORT_GLOBAL_EN), gate)));
    m.stmts.push(Stmt::connect(PORT_FIRE, Expr::r(ENABLE_BUFFER)));
    m
}

fn lower_condition(e: &CondExpr, sink_of: &dyn Fn(&str) -> String) -> Expr {
    match e {
        CondExpr::ScanField { name, .. } => Expr::r(field_reg(name)),
        CondExpr::Signal { path, .. } => Expr::r(sink_of(path)),
        CondExpr::Literal { width, value } => Expr::lit(*width, *value),
        CondExpr::Compare { op, lhs, rhs } => {
            let op = match op {
                CompareOp::Eq => BinaryOp::Eq,
                CompareOp::Neq => BinaryOp::Neq,
                CompareOp::Lt => BinaryOp::Lt,
                CompareOp::Gt => BinaryOp::Gt,
            };
            Expr::bin(op, lower_condition(lhs, sink_of), lower_condition(rhs, sink_of))
        }
        CondExpr::And(a, b) => Expr::and(lower_condition(a, sink_of), lower_condition(b, sink_of)),
        CondExpr::Or(a, b) => Expr::or(lower_condition(a, sink_of), lower_condition(b, sink_of)),
        CondExpr::Not(a) => Expr::not(lower_condition(a, sink_of)),
    }
}

/// Injector for a `width`-bit signal. With a conditioner attached the enable
/// arrives already buffered on `en`; otherwise the injector buffers
/// `global_en` itself.
pub fn injector_module(name: &str, kind: InjectorKind, width: Width, has_conditioner: bool) -> ModuleDef {
    let mut m = ModuleDef::new(name);
    m.ports.push(Port::input(PORT_IN, width));
    m.ports.push(Port::output(PORT_OUT, width));
    scan_ports(&mut m);
    if has_conditioner {
        m.ports.push(Port::input(PORT_EN, 1));
    }

    let layout: Vec<(String, Width)> = kind.layout(width).into_iter().map(|(n, w)| (n.to_string(), w)).collect();
    scan_fields_logic(&mut m, &layout);

    let buffered = if has_conditioner {
        Expr::r(PORT_EN)
    } else {
        m.decls.push(Decl::Reg { name: ENABLE_BUFFER.into(), width: 1, init: 0 });
        m.stmts.push(Stmt::reg_next(ENABLE_BUFFER, Expr::r(PORT_GLOBAL_EN)));
        Expr::r(ENABLE_BUFFER)
    };
    m.decls.push(Decl::Wire { name: "enable".into(), width: 1 });
    m.decls.push(Decl::Wire { name: "faulted".into(), width });
    m.stmts.push(Stmt::connect("enable", Expr::and(buffered, Expr::r(field_reg(IS_ACTIVE)))));

    let input = || Expr::r(PORT_IN);
    let mask = || Expr::r(field_reg(MASK));
    let flipped = || Expr::xor(input(), mask());
    if matches!(kind, InjectorKind::LfsrFlip | InjectorKind::CycleWindow) {
        m.decls.push(Decl::Reg { name: "ge_prev".into(), width: 1, init: 0 });
        m.decls.push(Decl::Wire { name: "rise".into(), width: 1 });
        m.stmts.push(Stmt::connect("rise", Expr::and(Expr::r(PORT_GLOBAL_EN), Expr::not(Expr::r("ge_prev")))));
        m.stmts.push(Stmt::reg_next("ge_prev", Expr::r(PORT_GLOBAL_EN)));
    }
    let faulted = match kind {
        InjectorKind::StuckAt => Expr::or(
            Expr::and(input(), Expr::not(mask())),
            Expr::and(Expr::r(field_reg(STUCK_VALUE)), mask()),
        ),
        InjectorKind::LfsrFlip => {
            m.decls.push(Decl::Reg { name: "lfsr".into(), width: 32, init: 1 });
            m.decls.push(Decl::Wire { name: "lfsr_adv".into(), width: 32 });
            let feedback = TAPS_32
                .iter()
                .map(|t| Expr::bits(Expr::r("lfsr"), 32 - t, 32 - t))
                .reduce(Expr::xor)
                .expect("taps");
            m.stmts.push(Stmt::connect("lfsr_adv", Expr::cat(feedback, Expr::bits(Expr::r("lfsr"), 31, 1))));
            m.stmts.push(Stmt::reg_next(
                "lfsr",
                Expr::mux(
                    Expr::r("rise"),
                    Expr::r(field_reg(SEED)),
                    Expr::mux(Expr::r("enable"), Expr::r("lfsr_adv"), Expr::r("lfsr")),
                ),
            ));
            Expr::mux(
                Expr::bin(BinaryOp::Lt, Expr::r("lfsr_adv"), Expr::r(field_reg(THRESHOLD))),
                flipped(),
                input(),
            )
        }
        InjectorKind::CycleWindow => {
            m.decls.push(Decl::Reg { name: "cycle".into(), width: 32, init: 0 });
            m.decls.push(Decl::Wire { name: "in_window".into(), width: 1 });
            let count = || Expr::r("cycle");
            m.stmts.push(Stmt::reg_next(
                "cycle",
                Expr::mux(
                    Expr::r("rise"),
                    Expr::lit(32, 0),
                    Expr::mux(
                        Expr::bin(BinaryOp::Eq, count(), Expr::lit(32, u64::from(u32::MAX))),
                        count(),
                        Expr::bin(BinaryOp::Add, count(), Expr::lit(32, 1)),
                    ),
                ),
            ));
            let widen = |e| Expr::cat(Expr::lit(1, 0), e);
            let end = Expr::bin(BinaryOp::Add, widen(Expr::r(field_reg(START_CYCLE))), Expr::r(field_reg(DURATION)));
            m.stmts.push(Stmt::connect(
                "in_window",
                Expr::and(
                    Expr::not(Expr::bin(BinaryOp::Lt, count(), Expr::r(field_reg(START_CYCLE)))),
                    Expr::bin(BinaryOp::Lt, widen(count()), end),
                ),
            ));
            Expr::mux(Expr::r("in_window"), flipped(), input())
        }
    };
    m.stmts.push(Stmt::connect("faulted", faulted));
    m.stmts.push(Stmt::connect(PORT_OUT, Expr::mux(Expr::r("enable"), Expr::r("faulted"), input())));
    m
}
