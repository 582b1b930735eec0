use std::collections::HashSet;
use std::fmt::Write;

use super::descriptor::ScanChainDescriptor;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("macro `{0}` would be defined twice")]
pub struct MacroCollision(pub String);

fn sanitize(s: &str) -> String {
    s.chars().map(|c| if c.is_ascii_alphanumeric() { c.to_ascii_uppercase() } else { '_' }).collect()
}

/// Macro-constant header with the offset and width of every field.
pub fn emit_companion(d: &ScanChainDescriptor) -> Result<String, MacroCollision> {
    let chain = sanitize(&d.chain_id);
    let mut out = String::new();
    let _ = writeln!(out, "// Scan chain `{}`: {} bits. Generated; do not edit.", d.chain_id, d.total_width);
    let _ = writeln!(out, "#pragma once");
    let mut seen = HashSet::new();
    let mut fields: Vec<_> = d.fields().collect();
    fields.sort_by_key(|(_, f)| f.offset);
    for (e, f) in fields {
        let stem = format!("NAIL_{chain}_{}_{}", sanitize(&e.component_id), sanitize(&f.name));
        for (suffix, value) in [("OFFSET", f.offset), ("WIDTH", f.width)] {
            let name = format!("{stem}_{suffix}");
            if !seen.insert(name.clone()) {
                return Err(MacroCollision(name));
            }
            let _ = writeln!(out, "#define {name} {value}");
        }
    }
    let total = format!("NAIL_{chain}_TOTAL_BITS");
    if seen.contains(&total) {
        return Err(MacroCollision(total));
    }
    let _ = writeln!(out, "#define {total} {}", d.total_width);
    Ok(out)
}
