use std::collections::HashMap;

use crate::nir::{Circuit, Direction, Port, Stmt, Width};

/// Instance path from the top module; empty for the top itself.
pub type InstPath = Vec<String>;

/// Module name at the end of `path`, if every step names an instance.
pub fn module_at<'c>(c: &'c Circuit, path: &[String]) -> Option<&'c str> {
    let mut module = c.top.as_str();
    for inst in path {
        let m = c.module(module)?;
        module = m.instances().find(|(n, _)| *n == inst)?.1;
    }
    Some(module)
}

/// How many times each module is elaborated below the top.
pub fn elaboration_counts(c: &Circuit) -> HashMap<String, usize> {
    fn walk(c: &Circuit, module: &str, counts: &mut HashMap<String, usize>) {
        *counts.entry(module.to_string()).or_default() += 1;
        if let Some(m) = c.module(module) {
            for (_, child) in m.instances() {
                walk(c, child, counts);
            }
        }
    }
    let mut counts = HashMap::new();
    walk(c, &c.top, &mut counts);
    counts
}

pub fn fresh_name(c: &Circuit, module: &str, base: &str) -> String {
    let m = c.module(module).expect("module on path");
    if !m.has_name(base) {
        return base.to_string();
    }
    (1..).map(|i| format!("{base}_{i}")).find(|n| !m.has_name(n)).expect("unbounded")
}

/// Punches ports through the hierarchy to connect a signal in one module to
/// a drivable reference in another. Routes go up to the lowest common
/// ancestor and back down.
pub struct Router<'c> {
    pub circuit: &'c mut Circuit,
    /// `(key, path)` to the local name carrying a broadcast signal at `path`.
    down: HashMap<(String, InstPath), String>,
}

impl<'c> Router<'c> {
    pub fn new(circuit: &'c mut Circuit) -> Self {
        Router { circuit, down: HashMap::new() }
    }

    fn module_name(&self, path: &[String]) -> String {
        module_at(self.circuit, path).expect("routed path exists").to_string()
    }

    fn add_port(&mut self, path: &[String], base: &str, direction: Direction, width: Width) -> String {
        let module = self.module_name(path);
        let name = fresh_name(self.circuit, &module, base);
        let m = self.circuit.module_mut(&module).expect("module");
        m.ports.push(Port { name: name.clone(), direction, width });
        name
    }

    fn connect(&mut self, path: &[String], lhs: String, rhs: String) {
        let module = self.module_name(path);
        self.circuit.module_mut(&module).expect("module").stmts.push(Stmt::connect(lhs, crate::nir::Expr::r(rhs)));
    }

    /// Drives `dst` (seen from `dst_path`) with `src` (seen from `src_path`).
    /// With `key`, downward port chains are reused by later routes of the
    /// same key; only use it for sources at the top.
    #[allow(clippy::too_many_arguments)]
    pub fn route(
        &mut self,
        src_path: &[String],
        src: &str,
        dst_path: &[String],
        dst: &str,
        width: Width,
        base: &str,
        key: Option<&str>,
    ) {
        let common = src_path.iter().zip(dst_path).take_while(|(a, b)| a == b).count();
        let mut cur = src.to_string();
        for depth in (common + 1..=src_path.len()).rev() {
            let port = self.add_port(&src_path[..depth], base, Direction::Output, width);
            self.connect(&src_path[..depth], port.clone(), cur);
            cur = format!("{}.{}", src_path[depth - 1], port);
        }
        for depth in common + 1..=dst_path.len() {
            let here = dst_path[..depth].to_vec();
            if let Some(k) = key {
                if let Some(local) = self.down.get(&(k.to_string(), here.clone())) {
                    cur = local.clone();
                    continue;
                }
            }
            let port = self.add_port(&here, base, Direction::Input, width);
            self.connect(&dst_path[..depth - 1], format!("{}.{}", dst_path[depth - 1], port), cur);
            cur = port;
            if let Some(k) = key {
                self.down.insert((k.to_string(), here), cur.clone());
            }
        }
        self.connect(dst_path, dst.to_string(), cur);
    }
}
