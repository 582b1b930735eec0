use std::fmt::Write;

use super::ast::{Circuit, Decl, Expr, Stmt, UnaryOp};

/// Canonical NIR text: ports, then declarations, then statements, one per line.
pub fn print_circuit(c: &Circuit) -> String {
    let mut out = String::new();
    // The dialect names the top module after the circuit.
    let _ = writeln!(out, "circuit {} :", c.top);
    for m in &c.modules {
        let _ = writeln!(out, "  module {} :", m.name);
        for p in &m.ports {
            let _ = writeln!(out, "    {} {} : UInt<{}>", p.direction, p.name, p.width);
        }
        for d in &m.decls {
            let _ = match d {
                Decl::Wire { name, width } => writeln!(out, "    wire {name} : UInt<{width}>"),
                Decl::Reg { name, width, init } => {
                    writeln!(out, "    reg {name} : UInt<{width}> init {}", literal(*init))
                }
                Decl::Mem { name, width, depth } => writeln!(out, "    mem {name} : UInt<{width}>[{depth}]"),
                Decl::Instance { name, module } => writeln!(out, "    inst {name} of {module}"),
            };
        }
        for s in &m.stmts {
            let _ = match s {
                Stmt::Connect { lhs, rhs } => writeln!(out, "    {lhs} <= {}", print_expr(rhs)),
                Stmt::RegNext { reg, rhs } => writeln!(out, "    {reg} <= {}", print_expr(rhs)),
                Stmt::MemRead { dst, mem, addr } => writeln!(out, "    read {dst} <= {mem}[{}]", print_expr(addr)),
                Stmt::MemWrite { mem, addr, data, en } => writeln!(
                    out,
                    "    write {mem}[{}] <= {} when {}",
                    print_expr(addr),
                    print_expr(data),
                    print_expr(en)
                ),
            };
        }
    }
    out
}

fn literal(v: u64) -> String {
    if v < 10 {
        v.to_string()
    } else {
        format!("0x{v:X}")
    }
}

pub fn print_expr(e: &Expr) -> String {
    match e {
        Expr::Literal { width, value } => format!("UInt<{width}>({})", literal(*value)),
        Expr::Ref(p) => p.clone(),
        Expr::Mux(c, a, b) => format!("mux({}, {}, {})", print_expr(c), print_expr(a), print_expr(b)),
        Expr::Unary(UnaryOp::Not, a) => format!("not({})", print_expr(a)),
        Expr::Binary(op, a, b) => format!("{}({}, {})", op.keyword(), print_expr(a), print_expr(b)),
        Expr::Bits { arg, hi, lo } => format!("bits({}, {hi}, {lo})", print_expr(arg)),
    }
}
