//! Scan chain layout, configuration packing and companion header emission.

mod companion;
mod config;
mod descriptor;

pub use companion::{emit_companion, MacroCollision};
pub use config::{crc32, payload_len, ConfigError, PackedConfig, ScanConfig};
pub use descriptor::{ComponentEntry, ComponentKind, DescriptorError, EntryLayout, FieldDesc, ScanChainDescriptor};
