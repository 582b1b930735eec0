use std::sync::Arc;

use crate::injectors::{IS_ACTIVE, SEED};
use crate::nir::mask;

use super::descriptor::{ComponentKind, FieldDesc, ScanChainDescriptor};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ConfigError {
    #[error("chain `{chain}` has no field `{component}.{field}`")]
    UnknownField { chain: String, component: String, field: String },
    #[error("value {value:#x} does not fit in the {width}-bit field `{component}.{field}`")]
    OutOfRange { component: String, field: String, width: u32, value: u64 },
    #[error("payload is {found} bytes, chain `{chain}` needs {expected}")]
    Length { chain: String, expected: usize, found: usize },
    #[error("checksum mismatch: stored {stored:#010x}, computed {computed:#010x}")]
    Checksum { stored: u32, computed: u32 },
    #[error("padding bits after bit {total_width} are not zero")]
    Padding { total_width: u32 },
    #[error("packed configuration is {0} bytes, too short to hold a checksum")]
    Truncated(usize),
    #[error("active LFSR injector `{0}` has a zero seed")]
    ZeroSeed(String),
}

/// Values for every scan field of one chain, stored as the LSB-first bit
/// vector that is shifted into the hardware.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScanConfig {
    descriptor: Arc<ScanChainDescriptor>,
    bits: Vec<u8>,
}

impl ScanConfig {
    /// All-zero configuration.
    pub fn new(descriptor: Arc<ScanChainDescriptor>) -> Self {
        let bytes = payload_len(descriptor.total_width);
        ScanConfig { descriptor, bits: vec![0; bytes] }
    }

    pub fn descriptor(&self) -> &Arc<ScanChainDescriptor> {
        &self.descriptor
    }

    fn lookup(&self, component: &str, field: &str) -> Result<&FieldDesc, ConfigError> {
        self.descriptor.field(component, field).ok_or_else(|| ConfigError::UnknownField {
            chain: self.descriptor.chain_id.clone(),
            component: component.to_string(),
            field: field.to_string(),
        })
    }

    pub fn set(&mut self, component: &str, field: &str, value: u64) -> Result<(), ConfigError> {
        let f = self.lookup(component, field)?;
        if value & !mask(f.width) != 0 {
            return Err(ConfigError::OutOfRange {
                component: component.to_string(),
                field: field.to_string(),
                width: f.width,
                value,
            });
        }
        let (offset, width) = (f.offset, f.width);
        for j in 0..width {
            self.set_bit(offset + j, value >> j & 1 == 1);
        }
        Ok(())
    }

    pub fn get(&self, component: &str, field: &str) -> Result<u64, ConfigError> {
        let f = self.lookup(component, field)?;
        Ok((0..f.width).fold(0, |acc, j| acc | (u64::from(self.bit(f.offset + j)) << j)))
    }

    pub fn bit(&self, k: u32) -> bool {
        self.bits[(k / 8) as usize] >> (k % 8) & 1 == 1
    }

    pub fn set_bit(&mut self, k: u32, v: bool) {
        assert!(k < self.descriptor.total_width, "bit {k} beyond chain");
        let byte = &mut self.bits[(k / 8) as usize];
        if v {
            *byte |= 1 << (k % 8);
        } else {
            *byte &= !(1 << (k % 8));
        }
    }

    /// Chain bits in shift order.
    pub fn bits(&self) -> impl Iterator<Item = bool> + '_ {
        (0..self.descriptor.total_width).map(|k| self.bit(k))
    }

    /// Rejects configurations the hardware cannot run: an active LFSR
    /// injector with a zero seed would lock its generator.
    pub fn check(&self) -> Result<(), ConfigError> {
        for e in &self.descriptor.entries {
            if e.kind == ComponentKind::LfsrFlip
                && self.get(&e.component_id, IS_ACTIVE)? == 1
                && self.get(&e.component_id, SEED)? == 0
            {
                return Err(ConfigError::ZeroSeed(e.component_id.clone()));
            }
        }
        Ok(())
    }

    pub fn pack(&self) -> PackedConfig {
        PackedConfig::new(self.bits.clone())
    }

    pub fn unpack(p: &PackedConfig, descriptor: Arc<ScanChainDescriptor>) -> Result<Self, ConfigError> {
        let expected = payload_len(descriptor.total_width);
        if p.payload.len() != expected {
            return Err(ConfigError::Length {
                chain: descriptor.chain_id.clone(),
                expected,
                found: p.payload.len(),
            });
        }
        p.verify()?;
        let tail = descriptor.total_width % 8;
        if tail != 0 && p.payload[expected - 1] >> tail != 0 {
            return Err(ConfigError::Padding { total_width: descriptor.total_width });
        }
        Ok(ScanConfig { descriptor, bits: p.payload.clone() })
    }
}

pub fn payload_len(total_width: u32) -> usize {
    total_width.div_ceil(8) as usize
}

/// CRC-32/IEEE (reflected 0xEDB88320, init and final XOR 0xFFFFFFFF).
pub fn crc32(bytes: &[u8]) -> u32 {
    crc32fast::hash(bytes)
}

/// Binary configuration as sent to the controller.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PackedConfig {
    pub payload: Vec<u8>,
    pub checksum: u32,
}

impl PackedConfig {
    pub fn new(payload: Vec<u8>) -> Self {
        let checksum = crc32(&payload);
        PackedConfig { payload, checksum }
    }

    pub fn verify(&self) -> Result<(), ConfigError> {
        let computed = crc32(&self.payload);
        if computed == self.checksum {
            Ok(())
        } else {
            Err(ConfigError::Checksum { stored: self.checksum, computed })
        }
    }

    /// Payload bit `k`, LSB-first within bytes.
    pub fn bit(&self, k: u32) -> bool {
        self.payload[(k / 8) as usize] >> (k % 8) & 1 == 1
    }

    /// File form: payload followed by the checksum, little-endian.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = self.payload.clone();
        out.extend_from_slice(&self.checksum.to_le_bytes());
        out
    }

    /// Splits a file into payload and checksum without verifying it.
    pub fn from_bytes(bytes: &[u8]) -> Result<Self, ConfigError> {
        if bytes.len() < 4 {
            return Err(ConfigError::Truncated(bytes.len()));
        }
        let (payload, sum) = bytes.split_at(bytes.len() - 4);
        Ok(PackedConfig { payload: payload.to_vec(), checksum: u32::from_le_bytes(sum.try_into().expect("4 bytes")) })
    }
}
