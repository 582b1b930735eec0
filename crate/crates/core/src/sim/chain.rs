use crate::injectors::template::{scan_fields, PORT_IN, PORT_OUT, PORT_SCAN_IN, PORT_SCAN_OUT};
use crate::nir::flatten::{CombAssign, FlatExpr, FlatNetlist, SignalId, SignalKind};
use crate::nir::Width;
use crate::scanchain::{ComponentKind, ScanChainDescriptor};
use crate::transforms::{chain_port, component_kind_of_module, component_of_instance};

use super::SimError;

/// One scan-field register of a chain, in chain order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FieldSlot {
    pub component_id: String,
    pub field: String,
    pub width: Width,
    pub reg: SignalId,
}

/// An injector's data path, for fault logging.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InjectorProbe {
    pub component_id: String,
    pub input: SignalId,
    pub output: SignalId,
}

/// Scan chain recovered from an instrumented netlist.
#[derive(Debug, Clone)]
pub struct ChainMap {
    pub chain_id: String,
    pub scan_in: SignalId,
    pub scan_en: SignalId,
    pub global_en: SignalId,
    pub scan_out: SignalId,
    pub fields: Vec<FieldSlot>,
    pub injectors: Vec<InjectorProbe>,
    pub descriptor: ScanChainDescriptor,
}

impl ChainMap {
    pub fn total_width(&self) -> u32 {
        self.descriptor.total_width
    }
}

/// Follows plain signal-to-signal connections backwards from `id`.
fn alias_source(net: &FlatNetlist, drivers: &[Option<usize>], mut id: SignalId) -> SignalId {
    for _ in 0..net.signals.len() {
        match drivers[id].map(|i| &net.comb[i]) {
            Some(CombAssign::Expr { expr: FlatExpr::Sig(src), .. }) => id = *src,
            _ => break,
        }
    }
    id
}

fn leaf_module<'n>(net: &'n FlatNetlist, instance: &str) -> Option<&'n str> {
    net.instances.iter().find(|i| i.path == instance).map(|i| i.module.as_str())
}

/// Finds every chain whose four ports exist on the top module and walks it
/// from `scan_out` back to `scan_in`.
/// Scan fields of a component module in chain order.
pub type FieldLayout = Vec<(String, Width)>;

pub fn discover_chains(net: &FlatNetlist, modules: &dyn Fn(&str) -> Option<FieldLayout>) -> Result<Vec<ChainMap>, SimError> {
    let mut drivers = vec![None; net.signals.len()];
    for (i, a) in net.comb.iter().enumerate() {
        drivers[a.dst()] = Some(i);
    }
    let mut chains = Vec::new();
    for s in &net.signals {
        if s.kind != SignalKind::Output {
            continue;
        }
        let Some(chain) = s.path.strip_prefix("scan_out_") else { continue };
        let port = |base: &str| net.signal(&chain_port(base, chain));
        let (Some(scan_in), Some(scan_en), Some(global_en), Some(scan_out)) =
            (port("scan_in"), port("scan_en"), port("global_en"), port("scan_out"))
        else {
            continue;
        };
        let broken = |why: String| SimError::Chain { chain: chain.to_string(), reason: why };

        let mut components = Vec::new();
        let mut cur = alias_source(net, &drivers, scan_out);
        while cur != scan_in {
            let path = &net.signals[cur].path;
            let instance = path
                .strip_suffix(&format!(".{PORT_SCAN_OUT}"))
                .ok_or_else(|| broken(format!("`{path}` is not a component scan output")))?;
            let module = leaf_module(net, instance).ok_or_else(|| broken(format!("no instance `{instance}`")))?;
            let kind = component_kind_of_module(module).ok_or_else(|| broken(format!("`{module}` is not a component")))?;
            let leaf = instance.rsplit('.').next().unwrap_or(instance);
            let id = component_of_instance(leaf).ok_or_else(|| broken(format!("unexpected instance name `{leaf}`")))?;
            if components.iter().any(|(p, ..): &(String, _, _, _)| p == instance) || components.len() > net.instances.len() {
                return Err(broken("chain loops".into()));
            }
            let fields = modules(module).ok_or_else(|| broken(format!("module `{module}` missing")))?;
            components.push((instance.to_string(), id, kind, fields));
            let sin = net
                .signal(&format!("{instance}.{PORT_SCAN_IN}"))
                .ok_or_else(|| broken(format!("`{instance}` has no scan input")))?;
            cur = alias_source(net, &drivers, sin);
        }

        let mut fields = Vec::new();
        let mut injectors = Vec::new();
        let mut entries = Vec::new();
        for (instance, id, kind, layout) in components {
            for (field, width) in &layout {
                let reg = net
                    .signal(&format!("{instance}.{}", crate::injectors::template::field_reg(field)))
                    .ok_or_else(|| broken(format!("`{instance}` lacks field `{field}`")))?;
                fields.push(FieldSlot { component_id: id.clone(), field: field.clone(), width: *width, reg });
            }
            if kind != ComponentKind::Conditioner {
                let port = |p: &str| net.signal(&format!("{instance}.{p}")).expect("injector data ports");
                injectors.push(InjectorProbe { component_id: id.clone(), input: port(PORT_IN), output: port(PORT_OUT) });
            }
            entries.push((id, kind, layout));
        }
        chains.push(ChainMap {
            chain_id: chain.to_string(),
            scan_in,
            scan_en,
            global_en,
            scan_out,
            fields,
            injectors,
            descriptor: ScanChainDescriptor::build(chain, entries),
        });
    }
    Ok(chains)
}

/// Scan-field layouts of the component modules in `c`.
pub fn component_layouts(c: &crate::nir::Circuit) -> impl Fn(&str) -> Option<Vec<(String, Width)>> + '_ {
    move |name| c.module(name).map(scan_fields)
}
