use std::collections::HashSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::injectors::InjectorKind;
use crate::nir::Width;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum ComponentKind {
    Conditioner,
    StuckAt,
    LfsrFlip,
    CycleWindow,
}

impl ComponentKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ComponentKind::Conditioner => "conditioner",
            ComponentKind::StuckAt => "stuckAt",
            ComponentKind::LfsrFlip => "lfsrFlip",
            ComponentKind::CycleWindow => "cycleWindow",
        }
    }

    pub fn injector(self) -> Option<InjectorKind> {
        match self {
            ComponentKind::Conditioner => None,
            ComponentKind::StuckAt => Some(InjectorKind::StuckAt),
            ComponentKind::LfsrFlip => Some(InjectorKind::LfsrFlip),
            ComponentKind::CycleWindow => Some(InjectorKind::CycleWindow),
        }
    }
}

impl From<InjectorKind> for ComponentKind {
    fn from(k: InjectorKind) -> Self {
        match k {
            InjectorKind::StuckAt => ComponentKind::StuckAt,
            InjectorKind::LfsrFlip => ComponentKind::LfsrFlip,
            InjectorKind::CycleWindow => ComponentKind::CycleWindow,
        }
    }
}

impl fmt::Display for ComponentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FieldDesc {
    pub name: String,
    pub width: Width,
    /// Bit index from the start of the chain.
    pub offset: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ComponentEntry {
    pub component_id: String,
    pub kind: ComponentKind,
    pub fields: Vec<FieldDesc>,
}

/// `(componentId, kind, [(field, width)])` in chain order.
pub type EntryLayout = (String, ComponentKind, Vec<(String, Width)>);

/// Ordered layout of one scan chain. Offset 0 is the first bit shifted in
/// during a serial load.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ScanChainDescriptor {
    pub chain_id: String,
    pub total_width: u32,
    pub entries: Vec<ComponentEntry>,
}

#[derive(Debug, thiserror::Error)]
pub enum DescriptorError {
    #[error("malformed descriptor JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("field `{component}.{field}` has offset {found}, expected {expected}")]
    Offset { component: String, field: String, expected: u32, found: u32 },
    #[error("totalWidth is {found} but the fields add up to {expected}")]
    TotalWidth { expected: u32, found: u32 },
    #[error("field `{component}.{field}` has width {width}, expected 1..=64")]
    FieldWidth { component: String, field: String, width: Width },
    #[error("duplicate field `{component}.{field}`")]
    Duplicate { component: String, field: String },
}

impl ScanChainDescriptor {
    /// Lays out `entries` contiguously from offset 0.
    pub fn build(chain_id: impl Into<String>, entries: Vec<EntryLayout>) -> Self {
        let mut offset = 0;
        let entries = entries
            .into_iter()
            .map(|(component_id, kind, fields)| {
                let fields = fields
                    .into_iter()
                    .map(|(name, width)| {
                        let f = FieldDesc { name, width, offset };
                        offset += width;
                        f
                    })
                    .collect();
                ComponentEntry { component_id, kind, fields }
            })
            .collect();
        ScanChainDescriptor { chain_id: chain_id.into(), total_width: offset, entries }
    }

    pub fn entry(&self, component: &str) -> Option<&ComponentEntry> {
        self.entries.iter().find(|e| e.component_id == component)
    }

    pub fn field(&self, component: &str, field: &str) -> Option<&FieldDesc> {
        self.entry(component)?.fields.iter().find(|f| f.name == field)
    }

    /// All fields with their owning component, in chain order.
    pub fn fields(&self) -> impl Iterator<Item = (&ComponentEntry, &FieldDesc)> {
        self.entries.iter().flat_map(|e| e.fields.iter().map(move |f| (e, f)))
    }

    /// Recomputes offsets and checks them against the stored values.
    pub fn check(&self) -> Result<(), DescriptorError> {
        let mut expected = 0u32;
        let mut seen = HashSet::new();
        for (e, f) in self.fields() {
            if !seen.insert((&e.component_id, &f.name)) {
                return Err(DescriptorError::Duplicate { component: e.component_id.clone(), field: f.name.clone() });
            }
            if !(1..=64).contains(&f.width) {
                return Err(DescriptorError::FieldWidth {
                    component: e.component_id.clone(),
                    field: f.name.clone(),
                    width: f.width,
                });
            }
            if f.offset != expected {
                return Err(DescriptorError::Offset {
                    component: e.component_id.clone(),
                    field: f.name.clone(),
                    expected,
                    found: f.offset,
                });
            }
            expected += f.width;
        }
        if self.total_width != expected {
            return Err(DescriptorError::TotalWidth { expected, found: self.total_width });
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("descriptor serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, DescriptorError> {
        let d: ScanChainDescriptor = serde_json::from_str(text)?;
        d.check()?;
        Ok(d)
    }
}
