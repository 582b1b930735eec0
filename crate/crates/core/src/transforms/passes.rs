use std::fmt;

use crate::cond::parse_condition;
use crate::injectors::template::{
    conditioner_module, injector_module, scan_fields, sink_port, PORT_EN, PORT_FIRE, PORT_GLOBAL_EN, PORT_IN,
    PORT_OUT, PORT_SCAN_EN, PORT_SCAN_IN, PORT_SCAN_OUT,
};
use crate::nir::{Circuit, Decl, Direction, Expr, ModuleScope, Port, Resolved, SignalScope, Stmt, Width};
use crate::scanchain::{ComponentKind, ScanChainDescriptor};

use super::hierarchy::{elaboration_counts, fresh_name, module_at, InstPath, Router};
use super::{
    chain_port, conditioner_component, conditioner_instance, conditioner_module_name, injector_component,
    injector_instance, injector_module_name, FaultAnnotation, TransformError,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum TargetKind {
    Input,
    Output,
    Wire,
    Reg,
}

#[derive(Debug, Clone)]
pub(crate) struct Target {
    pub path: InstPath,
    pub module: String,
    pub signal: String,
    pub width: Width,
    pub kind: TargetKind,
}

pub(crate) fn resolve_target(c: &Circuit, target: &str) -> Result<Target, TransformError> {
    let fail = |reason: &str| TransformError::Unresolved { target: target.to_string(), reason: reason.to_string() };
    let mut parts: Vec<String> = target.split('.').map(str::to_string).collect();
    let signal = parts.pop().filter(|s| !s.is_empty()).ok_or_else(|| fail("empty path"))?;
    let module = module_at(c, &parts).ok_or_else(|| fail("instance path does not exist"))?.to_string();
    let counts = elaboration_counts(c);
    for depth in 1..=parts.len() {
        let m = module_at(c, &parts[..depth]).expect("prefix exists");
        if counts.get(m).copied().unwrap_or(0) > 1 {
            return Err(TransformError::SharedModule(m.to_string()));
        }
    }
    let m = c.module(&module).expect("resolved module");
    let (width, kind) = match ModuleScope::new(c, m).resolve(&signal) {
        Some(Resolved::Port { direction: Direction::Input, width }) => (width, TargetKind::Input),
        Some(Resolved::Port { direction: Direction::Output, width }) => (width, TargetKind::Output),
        Some(Resolved::Wire { width }) => (width, TargetKind::Wire),
        Some(Resolved::Reg { width, .. }) => (width, TargetKind::Reg),
        Some(Resolved::Mem { .. }) => return Err(fail("memories are black boxes; target a port signal instead")),
        Some(_) => return Err(fail("not a signal")),
        None => return Err(fail(&format!("no signal `{signal}` in module `{module}`"))),
    };
    Ok(Target { path: parts, module, signal, width, kind })
}

/// A signal seen from the module at the end of an instance path.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SignalPath {
    pub instances: InstPath,
    /// Name as referenced inside that module, e.g. `w` or `u.port`.
    pub signal: String,
}

impl fmt::Display for SignalPath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in &self.instances {
            write!(f, "{i}.")?;
        }
        f.write_str(&self.signal)
    }
}

/// A conditioner sink that must be driven from a circuit signal.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WiringEndpoint {
    pub source: SignalPath,
    pub sink: SignalPath,
    pub width: Width,
}

fn add_module(c: &mut Circuit, m: crate::nir::ModuleDef) {
    c.modules.push(m);
}

fn host_mut<'c>(c: &'c mut Circuit, module: &str) -> &'c mut crate::nir::ModuleDef {
    c.module_mut(module).expect("host module")
}

/// Inserts one conditioner per conditioned annotation and returns the sink
/// connections still to be made.
pub fn pass_condition(c: &Circuit, anns: &[FaultAnnotation]) -> Result<(Circuit, Vec<WiringEndpoint>), TransformError> {
    let mut out = c.clone();
    let mut endpoints = Vec::new();
    for a in anns {
        let Some(text) = &a.condition else { continue };
        let t = resolve_target(c, &a.target)?;
        let host = c.module(&t.module).expect("host");
        let (expr, fields) = parse_condition(text, &ModuleScope::new(c, host))
            .map_err(|error| TransformError::Condition { id: a.component_id.clone(), error })?;
        let module = conditioner_module(&conditioner_module_name(&a.component_id), &expr, &fields);
        let instance = conditioner_instance(&a.component_id);
        for (i, (path, width)) in expr.signals().into_iter().enumerate() {
            endpoints.push(WiringEndpoint {
                source: SignalPath { instances: t.path.clone(), signal: path.to_string() },
                sink: SignalPath { instances: t.path.clone(), signal: format!("{instance}.{}", sink_port(i)) },
                width,
            });
        }
        host_mut(&mut out, &t.module).decls.push(Decl::Instance { name: instance, module: module.name.clone() });
        add_module(&mut out, module);
    }
    Ok((out, endpoints))
}

/// Reroutes the driver of every target through a fresh injector instance.
pub fn pass_inject(c: &Circuit, anns: &[FaultAnnotation]) -> Result<Circuit, TransformError> {
    let mut out = c.clone();
    for a in anns {
        let t = resolve_target(&out, &a.target)?;
        let id = &a.component_id;
        let module = injector_module(&injector_module_name(a.injector, id), a.injector, t.width, a.condition.is_some());
        let inst = injector_instance(id);
        let inj_in = format!("{inst}.{PORT_IN}");
        let inj_out = format!("{inst}.{PORT_OUT}");
        let pre = fresh_name(&out, &t.module, &format!("nail_pre_{id}"));

        let host = host_mut(&mut out, &t.module);
        let drivers: Vec<usize> = host
            .stmts
            .iter()
            .enumerate()
            .filter(|(_, s)| s.driven() == Some(t.signal.as_str()))
            .map(|(i, _)| i)
            .collect();
        let mut added = Vec::new();
        if t.kind == TargetKind::Input {
            for s in &mut host.stmts {
                for e in s.exprs_mut() {
                    e.map_refs(&mut |r| {
                        if *r == t.signal {
                            *r = inj_out.clone();
                        }
                    });
                }
            }
            added.push(Stmt::connect(&inj_in, Expr::r(&t.signal)));
        } else {
            let i = match drivers.as_slice() {
                [] => return Err(TransformError::Undriven(a.target.clone())),
                [i] => *i,
                _ => return Err(TransformError::MultiDriven(a.target.clone())),
            };
            match &mut host.stmts[i] {
                Stmt::Connect { lhs, .. } => {
                    *lhs = inj_in.clone();
                    added.push(Stmt::connect(&t.signal, Expr::r(&inj_out)));
                }
                Stmt::RegNext { rhs, .. } => {
                    let next = std::mem::replace(rhs, Expr::r(&inj_out));
                    added.push(Stmt::connect(&inj_in, next));
                }
                Stmt::MemRead { dst, .. } => {
                    *dst = pre.clone();
                    host.decls.push(Decl::Wire { name: pre.clone(), width: t.width });
                    added.push(Stmt::connect(&inj_in, Expr::r(&pre)));
                    added.push(Stmt::connect(&t.signal, Expr::r(&inj_out)));
                }
                Stmt::MemWrite { .. } => unreachable!("memory writes drive no signal"),
            }
        }
        if a.condition.is_some() {
            let cond = conditioner_instance(id);
            added.push(Stmt::connect(format!("{inst}.{PORT_EN}"), Expr::r(format!("{cond}.{PORT_FIRE}"))));
        }
        host.decls.push(Decl::Instance { name: inst, module: module.name.clone() });
        host.stmts.extend(added);
        add_module(&mut out, module);
    }
    Ok(out)
}

/// Drives each sink from its source. Sources may live in the sink's module
/// or in its direct parent.
pub fn pass_wiring(c: &Circuit, endpoints: &[WiringEndpoint]) -> Result<Circuit, TransformError> {
    let mut out = c.clone();
    for ep in endpoints {
        let fail = |reason: String| TransformError::Wiring {
            from: ep.source.to_string(),
            sink: ep.sink.to_string(),
            reason,
        };
        let width_at = |p: &SignalPath| -> Result<Width, TransformError> {
            let m = module_at(&out, &p.instances).and_then(|m| out.module(m));
            let m = m.ok_or_else(|| fail(format!("no instance path `{}`", p.instances.join("."))))?;
            ModuleScope::new(&out, m).signal_width(&p.signal).ok_or_else(|| fail(format!("`{p}` does not resolve")))
        };
        let (ws, wk) = (width_at(&ep.source)?, width_at(&ep.sink)?);
        if ws != ep.width || wk != ep.width {
            return Err(fail(format!("widths differ: source {ws}, sink {wk}, endpoint {}", ep.width)));
        }
        let (src, dst) = (&ep.source.instances, &ep.sink.instances);
        let one_up = dst.len() == src.len() + 1 && dst.starts_with(src);
        if src != dst && !one_up {
            return Err(fail("only same-module and parent-to-child routes are supported".into()));
        }
        Router::new(&mut out).route(src, &ep.source.signal, dst, &ep.sink.signal, ep.width, "nail_src", None);
    }
    Ok(out)
}

struct Component {
    path: InstPath,
    instance: String,
    entry_id: String,
    kind: ComponentKind,
}

/// Links every component into its chain and exposes the chain ports on the
/// top module. Offset 0 of a chain is the bit nearest `scan_out`.
pub fn pass_stitch(c: &Circuit, anns: &[FaultAnnotation]) -> Result<(Circuit, Vec<ScanChainDescriptor>), TransformError> {
    let mut chains: Vec<(&str, Vec<Component>)> = Vec::new();
    for a in anns {
        let t = resolve_target(c, &a.target)?;
        let idx = match chains.iter().position(|(id, _)| *id == a.chain_id) {
            Some(i) => i,
            None => {
                chains.push((&a.chain_id, Vec::new()));
                chains.len() - 1
            }
        };
        if a.condition.is_some() {
            chains[idx].1.push(Component {
                path: t.path.clone(),
                instance: conditioner_instance(&a.component_id),
                entry_id: conditioner_component(&a.component_id),
                kind: ComponentKind::Conditioner,
            });
        }
        chains[idx].1.push(Component {
            path: t.path,
            instance: injector_instance(&a.component_id),
            entry_id: injector_component(&a.component_id),
            kind: a.injector.into(),
        });
    }

    let mut out = c.clone();
    let top = out.top.clone();
    let mut descriptors = Vec::new();
    for (chain, comps) in &chains {
        let [scan_in, scan_en, global_en, scan_out] =
            [PORT_SCAN_IN, PORT_SCAN_EN, PORT_GLOBAL_EN, PORT_SCAN_OUT].map(|b| chain_port(b, chain));
        let top_mod = out.module_mut(&top).expect("top");
        for (name, dir) in [
            (&scan_in, Direction::Input),
            (&scan_en, Direction::Input),
            (&global_en, Direction::Input),
            (&scan_out, Direction::Output),
        ] {
            if top_mod.has_name(name) {
                return Err(TransformError::PortCollision(name.clone()));
            }
            top_mod.ports.push(Port { name: name.clone(), direction: dir, width: 1 });
        }

        let mut entries = Vec::new();
        for comp in comps {
            let host = module_at(&out, &comp.path).expect("host");
            let module = out
                .module(host)
                .and_then(|m| m.instances().find(|(n, _)| *n == comp.instance).map(|(_, m)| m.to_string()))
                .expect("component instance inserted");
            let fields = scan_fields(out.module(&module).expect("component module"));
            entries.push((comp.entry_id.clone(), comp.kind, fields));
        }

        let mut router = Router::new(&mut out);
        for comp in comps {
            for (port, global) in [(PORT_SCAN_EN, &scan_en), (PORT_GLOBAL_EN, &global_en)] {
                let sink = format!("{}.{port}", comp.instance);
                router.route(&[], global, &comp.path, &sink, 1, &format!("nail_{global}"), Some(global));
            }
        }
        match comps.as_slice() {
            [] => router.route(&[], &scan_in, &[], &scan_out, 1, "nail_scan", None),
            [first, ..] => {
                let base = format!("nail_scan_{chain}");
                let out_of = |c: &Component| format!("{}.{PORT_SCAN_OUT}", c.instance);
                let in_of = |c: &Component| format!("{}.{PORT_SCAN_IN}", c.instance);
                router.route(&first.path, &out_of(first), &[], &scan_out, 1, &base, None);
                for pair in comps.windows(2) {
                    router.route(&pair[1].path, &out_of(&pair[1]), &pair[0].path, &in_of(&pair[0]), 1, &base, None);
                }
                let last = comps.last().expect("nonempty");
                router.route(&[], &scan_in, &last.path, &in_of(last), 1, &base, None);
            }
        }
        descriptors.push(ScanChainDescriptor::build(chain.to_string(), entries));
    }
    Ok((out, descriptors))
}
