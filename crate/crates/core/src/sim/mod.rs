//! Cycle-accurate NIR interpreter, scan controller model and fault
//! campaigns.
//!
//! Memories read combinationally and write on the clock edge. Addresses
//! past the end of a memory read as 0 and drop writes.

mod campaign;
mod chain;
mod controller;
mod model;
mod stimulus;
mod trace;

use crate::nir::{Diagnostic, Width};
use crate::scanchain::ConfigError;

pub use campaign::{run_campaign, run_faulty, run_golden, CampaignResult, Schedule};
pub use chain::{component_layouts, discover_chains, ChainMap, FieldLayout, FieldSlot, InjectorProbe};
pub use controller::{FaultEvent, Harness, LoadMode};
pub use model::{elaborate, SimModel};
pub use stimulus::{InputChange, Stimulus};
pub use trace::{diff_runs, DiffError, DivergenceReport, Trace};

#[derive(Debug, thiserror::Error)]
pub enum SimError {
    #[error("circuit is invalid: {}", .0.iter().map(ToString::to_string).collect::<Vec<_>>().join("; "))]
    Invalid(Vec<Diagnostic>),
    #[error("no signal `{0}`")]
    UnknownSignal(String),
    #[error("`{0}` is not a top-level input")]
    NotAnInput(String),
    #[error("value {value:#x} does not fit input `{path}` of width {width}")]
    InputRange { path: String, width: Width, value: u64 },
    #[error("no scan chain `{0}`")]
    UnknownChain(String),
    #[error("scan chain `{chain}` is malformed: {reason}")]
    Chain { chain: String, reason: String },
    #[error("configuration rejected: {0}")]
    Config(ConfigError),
    #[error("chain `{0}` is enabled; disable it before shifting")]
    LoadWhileEnabled(String),
    #[error("chain `{0}` is still shifting")]
    Busy(String),
    #[error("bad stimulus: {0}")]
    Stimulus(String),
    #[error("schedule must satisfy load <= enable < disable")]
    Schedule,
}
