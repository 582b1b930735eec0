use std::collections::{HashMap, HashSet};

use super::ast::{mask, Circuit, Decl, Direction, ModuleDef, Stmt, Width, MAX_WIDTH};
use super::diag::{DiagCode, Diagnostic, Site};
use super::flatten::flatten;
use super::scope::{ModuleScope, Resolved};

/// Checks every structural invariant of `c`. An empty result means the
/// circuit can be flattened and simulated.
pub fn validate_circuit(c: &Circuit) -> Vec<Diagnostic> {
    let mut diags = Vec::new();

    let mut seen = HashSet::new();
    for m in &c.modules {
        if !seen.insert(m.name.as_str()) {
            diags.push(
                Diagnostic::new(DiagCode::Duplicate, format!("duplicate module `{}`", m.name))
                    .at(&m.name, Site::Module),
            );
        }
    }
    if c.top_module().is_none() {
        diags.push(Diagnostic::new(DiagCode::Unresolved, format!("top module `{}` not found", c.top)));
    }
    if c.name != c.top {
        diags.push(Diagnostic::new(
            DiagCode::Unresolved,
            format!("circuit `{}` must be named after its top module `{}`", c.name, c.top),
        ));
    }

    for m in &c.modules {
        check_module(c, m, &mut diags);
    }
    check_recursion(c, &mut diags);

    if diags.is_empty() {
        match flatten(c) {
            Ok(net) => {
                if let Err(cycles) = net.comb_order() {
                    for cycle in cycles {
                        let names: Vec<&str> = cycle.iter().map(|&i| net.signals[i].path.as_str()).collect();
                        diags.push(Diagnostic::new(
                            DiagCode::CombLoop,
                            format!("combinational loop through {}", names.join(", ")),
                        ));
                    }
                }
            }
            Err(d) => diags.push(d),
        }
    }
    diags
}

fn check_width(w: Width, what: &str, name: &str) -> Option<String> {
    (w == 0 || w > MAX_WIDTH).then(|| format!("{what} `{name}` has width {w}, expected 1..={MAX_WIDTH}"))
}

/// Per-module checks: names, declarations, statement typing and drivers.
pub(crate) fn check_module(c: &Circuit, m: &ModuleDef, diags: &mut Vec<Diagnostic>) {
    let at = |code: DiagCode, site: Site, msg: String| Diagnostic::new(code, msg).at(&m.name, site);

    let mut names: HashSet<&str> = HashSet::new();
    for (i, p) in m.ports.iter().enumerate() {
        if !names.insert(&p.name) {
            diags.push(at(DiagCode::Duplicate, Site::Port(i), format!("duplicate identifier `{}`", p.name)));
        }
        if let Some(msg) = check_width(p.width, "port", &p.name) {
            diags.push(at(DiagCode::Width, Site::Port(i), msg));
        }
    }
    for (i, d) in m.decls.iter().enumerate() {
        if !names.insert(d.name()) {
            diags.push(at(DiagCode::Duplicate, Site::Decl(i), format!("duplicate identifier `{}`", d.name())));
        }
        let problem = match d {
            Decl::Wire { name, width } => check_width(*width, "wire", name),
            Decl::Reg { name, width, init } => check_width(*width, "reg", name).or_else(|| {
                (*init & !mask(*width) != 0)
                    .then(|| format!("reg `{name}` init {init} does not fit in UInt<{width}>"))
            }),
            Decl::Mem { name, width, depth } => check_width(*width, "mem", name)
                .or_else(|| (*depth == 0).then(|| format!("mem `{name}` has depth 0"))),
            Decl::Instance { name, module } => {
                if c.module(module).is_none() {
                    diags.push(at(
                        DiagCode::Unresolved,
                        Site::Decl(i),
                        format!("instance `{name}` of unknown module `{module}`"),
                    ));
                }
                None
            }
        };
        if let Some(msg) = problem {
            diags.push(at(DiagCode::Width, Site::Decl(i), msg));
        }
    }

    let scope = ModuleScope::new(c, m);
    let mut drivers: HashMap<&str, usize> = HashMap::new();
    let mut mem_reads: HashMap<&str, usize> = HashMap::new();
    let mut mem_writes: HashMap<&str, usize> = HashMap::new();

    for (i, s) in m.stmts.iter().enumerate() {
        let site = Site::Stmt(i);
        let width_of = |e| scope.expr_width(e).map_err(|(code, msg)| at(code, site, msg));
        let result: Result<(), Diagnostic> = (|| {
            match s {
                Stmt::Connect { lhs, rhs } => {
                    let lw = drivable(&scope, lhs, false).map_err(|(code, msg)| at(code, site, msg))?;
                    count_driver(&mut drivers, lhs, &m.name, site)?;
                    let rw = width_of(rhs)?;
                    expect_width(lw, rw, lhs).map_err(|msg| at(DiagCode::Width, site, msg))
                }
                Stmt::RegNext { reg, rhs } => {
                    let lw = drivable(&scope, reg, true).map_err(|(code, msg)| at(code, site, msg))?;
                    count_driver(&mut drivers, reg, &m.name, site)?;
                    let rw = width_of(rhs)?;
                    expect_width(lw, rw, reg).map_err(|msg| at(DiagCode::Width, site, msg))
                }
                Stmt::MemRead { dst, mem, addr } => {
                    let dw = drivable(&scope, dst, false).map_err(|(code, msg)| at(code, site, msg))?;
                    count_driver(&mut drivers, dst, &m.name, site)?;
                    let mw = memory(&scope, mem).map_err(|(code, msg)| at(code, site, msg))?;
                    if bump(&mut mem_reads, mem) > 1 {
                        return Err(at(DiagCode::MultiDrive, site, format!("mem `{mem}` has more than one read port")));
                    }
                    width_of(addr)?;
                    expect_width(dw, mw, dst).map_err(|msg| at(DiagCode::Width, site, msg))
                }
                Stmt::MemWrite { mem, addr, data, en } => {
                    let mw = memory(&scope, mem).map_err(|(code, msg)| at(code, site, msg))?;
                    if bump(&mut mem_writes, mem) > 1 {
                        return Err(at(DiagCode::MultiDrive, site, format!("mem `{mem}` has more than one write port")));
                    }
                    width_of(addr)?;
                    let dw = width_of(data)?;
                    if dw != mw {
                        return Err(at(
                            DiagCode::Width,
                            site,
                            format!("write data is UInt<{dw}> but mem `{mem}` is UInt<{mw}>"),
                        ));
                    }
                    let ew = width_of(en)?;
                    if ew != 1 {
                        return Err(at(DiagCode::Width, site, format!("write enable must be UInt<1>, found UInt<{ew}>")));
                    }
                    Ok(())
                }
            }
        })();
        if let Err(d) = result {
            diags.push(d);
        }
    }

    // Everything that needs exactly one driver.
    for (i, p) in m.ports.iter().enumerate() {
        if p.direction == Direction::Output && !drivers.contains_key(p.name.as_str()) {
            diags.push(at(DiagCode::Undriven, Site::Port(i), format!("output `{}` is never driven", p.name)));
        }
    }
    for (i, d) in m.decls.iter().enumerate() {
        match d {
            Decl::Wire { name, .. } | Decl::Reg { name, .. } if !drivers.contains_key(name.as_str()) => {
                diags.push(at(DiagCode::Undriven, Site::Decl(i), format!("`{name}` is never driven")));
            }
            Decl::Instance { name, module } => {
                let Some(child) = c.module(module) else { continue };
                for p in child.ports.iter().filter(|p| p.direction == Direction::Input) {
                    let path = format!("{name}.{}", p.name);
                    if !drivers.contains_key(path.as_str()) {
                        diags.push(at(DiagCode::Undriven, Site::Decl(i), format!("input `{path}` is never driven")));
                    }
                }
            }
            _ => {}
        }
    }
}

fn bump<'a>(counts: &mut HashMap<&'a str, usize>, key: &'a str) -> usize {
    let n = counts.entry(key).or_insert(0);
    *n += 1;
    *n
}

fn count_driver<'a>(
    drivers: &mut HashMap<&'a str, usize>,
    path: &'a str,
    module: &str,
    site: Site,
) -> Result<(), Diagnostic> {
    if bump(drivers, path) > 1 {
        return Err(Diagnostic::new(DiagCode::MultiDrive, format!("`{path}` is driven more than once")).at(module, site));
    }
    Ok(())
}

fn expect_width(lhs: Width, rhs: Width, name: &str) -> Result<(), String> {
    if lhs == rhs {
        Ok(())
    } else {
        Err(format!("width mismatch: `{name}` is UInt<{lhs}> but the driving expression is UInt<{rhs}>"))
    }
}

/// Width of a connection target, checking it may be driven here.
fn drivable(scope: &ModuleScope<'_>, path: &str, want_reg: bool) -> Result<Width, (DiagCode, String)> {
    let r = scope
        .resolve(path)
        .ok_or_else(|| (DiagCode::Unresolved, format!("unresolved reference `{path}`")))?;
    match (r, want_reg) {
        (Resolved::Reg { width, .. }, true) => Ok(width),
        (Resolved::Wire { width }, false)
        | (Resolved::Port { direction: Direction::Output, width }, false)
        | (Resolved::InstancePort { direction: Direction::Input, width, .. }, false) => Ok(width),
        (Resolved::Reg { .. }, false) => {
            Err((DiagCode::IllegalDrive, format!("register `{path}` must be driven by a register update")))
        }
        _ => Err((DiagCode::IllegalDrive, format!("`{path}` cannot be driven here"))),
    }
}

fn memory(scope: &ModuleScope<'_>, path: &str) -> Result<Width, (DiagCode, String)> {
    match scope.resolve(path) {
        Some(Resolved::Mem { width, .. }) => Ok(width),
        Some(_) => Err((DiagCode::Unresolved, format!("`{path}` is not a memory"))),
        None => Err((DiagCode::Unresolved, format!("unresolved memory `{path}`"))),
    }
}

fn check_recursion(c: &Circuit, diags: &mut Vec<Diagnostic>) {
    fn visit<'a>(
        c: &'a Circuit,
        name: &'a str,
        stack: &mut Vec<&'a str>,
        done: &mut HashSet<&'a str>,
        diags: &mut Vec<Diagnostic>,
    ) {
        if done.contains(name) {
            return;
        }
        if stack.contains(&name) {
            diags.push(
                Diagnostic::new(DiagCode::Unresolved, format!("recursive instantiation of module `{name}`"))
                    .at(name, Site::Module),
            );
            return;
        }
        let Some(m) = c.module(name) else { return };
        stack.push(name);
        for (_, child) in m.instances() {
            visit(c, child, stack, done, diags);
        }
        stack.pop();
        done.insert(name);
    }
    let mut done = HashSet::new();
    for m in &c.modules {
        visit(c, &m.name, &mut Vec::new(), &mut done, diags);
    }
}
