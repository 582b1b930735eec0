//! The instrumentation pipeline: conditioner insertion, injector insertion,
//! condition-signal wiring and scan-chain stitching.
//!
//! Every inserted identifier starts with `nail_`. Inside a host module, the
//! injector for component `id` is instance `nail_inj_<id>` and its
//! conditioner is `nail_cond_<id>`. In the descriptor they appear as
//! `<id>_inj` and `<id>_cond`.

mod annotations;
mod hierarchy;
mod passes;

use std::collections::HashSet;
use std::fmt;

use crate::cond::CondError;
use crate::injectors::InjectorKind;
use crate::nir::flatten::SignalKind;
use crate::nir::{flatten, validate_circuit, Circuit, Decl, Diagnostic, Width};
use crate::scanchain::{ComponentKind, ScanChainDescriptor};

pub use annotations::{parse_annotations, AnnotationError, FaultAnnotation};
pub use hierarchy::{module_at, InstPath};
pub use passes::{pass_condition, pass_inject, pass_stitch, pass_wiring, SignalPath, WiringEndpoint};

pub const RESERVED_PREFIX: &str = "nail_";

pub fn injector_instance(id: &str) -> String {
    format!("nail_inj_{id}")
}

pub fn conditioner_instance(id: &str) -> String {
    format!("nail_cond_{id}")
}

pub fn injector_module_name(kind: InjectorKind, id: &str) -> String {
    format!("nail_{}_{id}", kind.as_str().to_ascii_lowercase())
}

pub fn conditioner_module_name(id: &str) -> String {
    format!("nail_conditioner_{id}")
}

pub fn injector_component(id: &str) -> String {
    format!("{id}_inj")
}

pub fn conditioner_component(id: &str) -> String {
    format!("{id}_cond")
}

/// Top-level port `base` of chain `chain`, e.g. `scan_in_rocket`.
pub fn chain_port(base: &str, chain: &str) -> String {
    format!("{base}_{chain}")
}

/// Component kind of a generated module, recovered from its name.
pub fn component_kind_of_module(module: &str) -> Option<ComponentKind> {
    let rest = module.strip_prefix(RESERVED_PREFIX)?;
    if rest.starts_with("conditioner_") {
        return Some(ComponentKind::Conditioner);
    }
    InjectorKind::ALL
        .into_iter()
        .find(|k| rest.starts_with(&format!("{}_", k.as_str().to_ascii_lowercase())))
        .map(ComponentKind::from)
}

/// Descriptor component id for a generated instance name.
pub fn component_of_instance(instance: &str) -> Option<String> {
    if let Some(id) = instance.strip_prefix("nail_inj_") {
        Some(injector_component(id))
    } else {
        instance.strip_prefix("nail_cond_").map(conditioner_component)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum TransformError {
    #[error("input circuit is invalid: {}", join(.0))]
    Invalid(Vec<Diagnostic>),
    #[error("name `{0}` uses the reserved prefix `nail_`")]
    Reserved(String),
    #[error("`{0}` is not a valid identifier")]
    BadIdentifier(String),
    #[error("cannot resolve target `{target}`: {reason}")]
    Unresolved { target: String, reason: String },
    #[error("module `{0}` is instantiated more than once; instrumenting it would fault every copy")]
    SharedModule(String),
    #[error("duplicate component id `{0}`")]
    DuplicateComponent(String),
    #[error("signal `{0}` is targeted more than once")]
    DuplicateTarget(String),
    #[error("condition of `{id}`: {error}")]
    Condition { id: String, error: CondError },
    #[error("target `{0}` has no driver")]
    Undriven(String),
    #[error("target `{0}` has more than one driver")]
    MultiDriven(String),
    #[error("top module already has a port or declaration named `{0}`")]
    PortCollision(String),
    #[error("cannot wire `{from}` to `{sink}`: {reason}")]
    Wiring { from: String, sink: String, reason: String },
    #[error("instrumented circuit failed revalidation: {}", join(.0))]
    Internal(Vec<Diagnostic>),
}

fn join(diags: &[Diagnostic]) -> String {
    diags.iter().map(ToString::to_string).collect::<Vec<_>>().join("; ")
}

fn is_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

fn check_reserved(c: &Circuit) -> Result<(), TransformError> {
    let reserved = |n: &str| n.starts_with(RESERVED_PREFIX);
    for m in &c.modules {
        let names = std::iter::once(m.name.as_str())
            .chain(m.ports.iter().map(|p| p.name.as_str()))
            .chain(m.decls.iter().map(Decl::name));
        if let Some(n) = names.into_iter().find(|n| reserved(n)) {
            return Err(TransformError::Reserved(n.to_string()));
        }
    }
    Ok(())
}

fn check_annotations(c: &Circuit, anns: &[FaultAnnotation]) -> Result<(), TransformError> {
    let mut ids = HashSet::new();
    let mut targets = HashSet::new();
    for a in anns {
        for name in [&a.chain_id, &a.component_id] {
            if !is_identifier(name) {
                return Err(TransformError::BadIdentifier(name.clone()));
            }
        }
        if !ids.insert(a.component_id.as_str()) {
            return Err(TransformError::DuplicateComponent(a.component_id.clone()));
        }
        let t = passes::resolve_target(c, &a.target)?;
        if !targets.insert((t.path.clone(), t.signal.clone())) {
            return Err(TransformError::DuplicateTarget(a.target.clone()));
        }
    }
    Ok(())
}

/// Runs the full pipeline. The input circuit must validate cleanly; the
/// output is revalidated before it is returned.
pub fn instrument(c: &Circuit, anns: &[FaultAnnotation]) -> Result<(Circuit, Vec<ScanChainDescriptor>), TransformError> {
    let diags = validate_circuit(c);
    if !diags.is_empty() {
        return Err(TransformError::Invalid(diags));
    }
    check_reserved(c)?;
    check_annotations(c, anns)?;

    let (conditioned, endpoints) = pass_condition(c, anns)?;
    let injected = pass_inject(&conditioned, anns)?;
    let wired = pass_wiring(&injected, &endpoints)?;
    let (out, descriptors) = pass_stitch(&wired, anns)?;

    let diags = validate_circuit(&out);
    if !diags.is_empty() {
        return Err(TransformError::Internal(diags));
    }
    Ok((out, descriptors))
}

/// State added by instrumentation, split by role.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Overhead {
    /// `(chainId, totalWidth)` per chain.
    pub chains: Vec<(String, u32)>,
    pub enable_buffers: u64,
    /// LFSR, window counter and edge-detect registers.
    pub auxiliary: u64,
    pub total: u64,
}

impl Overhead {
    pub fn chain_bits(&self) -> u64 {
        self.chains.iter().map(|(_, w)| u64::from(*w)).sum()
    }
}

impl fmt::Display for Overhead {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (chain, w) in &self.chains {
            writeln!(f, "chain {chain}: {w} scan bits")?;
        }
        writeln!(f, "enable buffers: {}", self.enable_buffers)?;
        writeln!(f, "auxiliary state bits: {}", self.auxiliary)?;
        write!(f, "added state bits: {}", self.total)
    }
}

/// Register bits present in `instrumented` but not in `baseline`.
pub fn overhead(baseline: &Circuit, instrumented: &Circuit, descriptors: &[ScanChainDescriptor]) -> Result<Overhead, Diagnostic> {
    let before = flatten(baseline)?;
    let after = flatten(instrumented)?;
    let total = after.state_bits() - before.state_bits();
    let enable_buffers = after
        .signals
        .iter()
        .filter(|s| matches!(s.kind, SignalKind::Reg { .. }))
        .filter(|s| s.path.ends_with(&format!(".{}", crate::injectors::template::ENABLE_BUFFER)))
        .filter(|s| s.path.split('.').any(|p| p.starts_with(RESERVED_PREFIX)))
        .map(|s| u64::from(s.width))
        .sum();
    let chains: Vec<(String, u32)> = descriptors.iter().map(|d| (d.chain_id.clone(), d.total_width)).collect();
    let chain_bits: u64 = chains.iter().map(|(_, w)| u64::from(*w)).sum();
    Ok(Overhead { chains, enable_buffers, auxiliary: total - chain_bits - enable_buffers, total })
}

/// Width of the target signal of `a` in `c`.
pub fn target_width(c: &Circuit, target: &str) -> Result<Width, TransformError> {
    passes::resolve_target(c, target).map(|t| t.width)
}
