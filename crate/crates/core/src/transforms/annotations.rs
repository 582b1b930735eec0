use indexmap::IndexMap;
use serde::Deserialize;

use crate::injectors::InjectorKind;

/// One faulty target: the signal to instrument, how, and on which chain.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FaultAnnotation {
    /// Instance path from the top module followed by a signal name, e.g. `core.rf_wdata`.
    pub target: String,
    pub injector: InjectorKind,
    pub condition: Option<String>,
    pub chain_id: String,
    pub component_id: String,
}

impl FaultAnnotation {
    /// Annotation whose component id is the target's leaf name.
    pub fn new(target: impl Into<String>, injector: InjectorKind, chain_id: impl Into<String>) -> Self {
        let target = target.into();
        let component_id = leaf(&target).to_string();
        FaultAnnotation { target, injector, condition: None, chain_id: chain_id.into(), component_id }
    }

    pub fn with_condition(mut self, condition: impl Into<String>) -> Self {
        self.condition = Some(condition.into());
        self
    }

    pub fn with_id(mut self, id: impl Into<String>) -> Self {
        self.component_id = id.into();
        self
    }
}

fn leaf(path: &str) -> &str {
    path.rsplit('.').next().unwrap_or(path)
}

#[derive(Debug, thiserror::Error)]
pub enum AnnotationError {
    #[error("malformed annotation JSON: {0}")]
    Json(#[from] serde_json::Error),
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct FileEntry {
    target: String,
    injector: InjectorKind,
    #[serde(default)]
    condition: Option<String>,
    #[serde(default)]
    id: Option<String>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct AnnotationFile {
    chains: IndexMap<String, Vec<FileEntry>>,
}

/// Reads an annotation file. Chains keep file order, and so do the entries
/// inside each chain.
pub fn parse_annotations(text: &str) -> Result<Vec<FaultAnnotation>, AnnotationError> {
    let file: AnnotationFile = serde_json::from_str(text)?;
    let mut out = Vec::new();
    for (chain, entries) in file.chains {
        for e in entries {
            let mut a = FaultAnnotation::new(e.target, e.injector, chain.clone());
            a.condition = e.condition;
            if let Some(id) = e.id {
                a.component_id = id;
            }
            out.push(a);
        }
    }
    Ok(out)
}
