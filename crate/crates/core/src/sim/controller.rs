use std::collections::VecDeque;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::nir::flatten::SignalId;
use crate::nir::Circuit;
use crate::scanchain::{ConfigError, PackedConfig, ScanConfig};

use super::chain::{component_layouts, discover_chains, ChainMap};
use super::model::{elaborate, SimModel};
use super::SimError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LoadMode {
    Serial,
    Broadside,
}

/// An observed injection: the injector's output differed from its input.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct FaultEvent {
    pub cycle: u64,
    pub chain_id: String,
    pub component_id: String,
    pub original_value: u64,
    pub faulted_value: u64,
}

#[derive(Debug, Default)]
struct ChainState {
    enabled: bool,
    shift: VecDeque<bool>,
    /// Remaining rotation cycles and captured bits of a readback.
    rotate: usize,
    captured: Vec<bool>,
}

/// A simulated circuit together with the scan controller that drives its
/// chain ports. Shifting consumes cycles while the circuit keeps running.
#[derive(Debug)]
pub struct Harness {
    model: SimModel,
    chains: Vec<ChainMap>,
    state: Vec<ChainState>,
    log: Vec<FaultEvent>,
}

impl Harness {
    pub fn new(c: &Circuit) -> Result<Self, SimError> {
        let model = elaborate(c)?;
        let chains = discover_chains(model.netlist(), &component_layouts(c))?;
        let state = chains.iter().map(|_| ChainState::default()).collect();
        Ok(Harness { model, chains, state, log: Vec::new() })
    }

    pub fn model(&self) -> &SimModel {
        &self.model
    }

    pub fn chains(&self) -> &[ChainMap] {
        &self.chains
    }

    pub fn chain(&self, chain_id: &str) -> Result<&ChainMap, SimError> {
        self.index(chain_id).map(|i| &self.chains[i])
    }

    fn index(&self, chain_id: &str) -> Result<usize, SimError> {
        self.chains
            .iter()
            .position(|c| c.chain_id == chain_id)
            .ok_or_else(|| SimError::UnknownChain(chain_id.to_string()))
    }

    /// True while a load or readback is still shifting.
    pub fn busy(&self, chain_id: &str) -> Result<bool, SimError> {
        let s = &self.state[self.index(chain_id)?];
        Ok(!s.shift.is_empty() || s.rotate > 0)
    }

    /// Verifies and loads a configuration. Serial loads are queued and take
    /// one cycle per bit; broadside loads take effect immediately.
    pub fn load(&mut self, chain_id: &str, p: &PackedConfig, mode: LoadMode) -> Result<(), SimError> {
        let i = self.index(chain_id)?;
        if self.state[i].enabled {
            return Err(SimError::LoadWhileEnabled(chain_id.to_string()));
        }
        if self.busy(chain_id)? {
            return Err(SimError::Busy(chain_id.to_string()));
        }
        let cfg = ScanConfig::unpack(p, Arc::new(self.chains[i].descriptor.clone()))?;
        cfg.check()?;
        match mode {
            LoadMode::Serial => self.state[i].shift = cfg.bits().collect(),
            LoadMode::Broadside => {
                for f in &self.chains[i].fields {
                    let v = cfg.get(&f.component_id, &f.field).expect("field from descriptor");
                    self.model.force_reg(f.reg, v);
                }
            }
        }
        Ok(())
    }

    pub fn enable(&mut self, chain_id: &str, on: bool) -> Result<(), SimError> {
        let i = self.index(chain_id)?;
        if on && self.busy(chain_id)? {
            return Err(SimError::Busy(chain_id.to_string()));
        }
        self.state[i].enabled = on;
        Ok(())
    }

    /// Starts a rotating readback: the chain shifts `totalWidth` cycles with
    /// `scan_out` fed back to `scan_in`, so the configuration survives.
    pub fn start_readback(&mut self, chain_id: &str) -> Result<(), SimError> {
        let i = self.index(chain_id)?;
        if self.state[i].enabled {
            return Err(SimError::LoadWhileEnabled(chain_id.to_string()));
        }
        if self.busy(chain_id)? {
            return Err(SimError::Busy(chain_id.to_string()));
        }
        self.state[i].rotate = self.chains[i].total_width() as usize;
        self.state[i].captured.clear();
        Ok(())
    }

    /// Bits captured by the last completed readback, first-out first.
    pub fn readback(&self, chain_id: &str) -> Result<Option<PackedConfig>, SimError> {
        let i = self.index(chain_id)?;
        let s = &self.state[i];
        if s.rotate > 0 || s.captured.len() != self.chains[i].total_width() as usize {
            return Ok(None);
        }
        let mut payload = vec![0u8; s.captured.len().div_ceil(8)];
        for (k, &b) in s.captured.iter().enumerate() {
            payload[k / 8] |= u8::from(b) << (k % 8);
        }
        Ok(Some(PackedConfig::new(payload)))
    }

    /// Current field values of a chain, read directly from the registers.
    pub fn scan_state(&self, chain_id: &str) -> Result<ScanConfig, SimError> {
        let ch = self.chain(chain_id)?;
        let mut cfg = ScanConfig::new(Arc::new(ch.descriptor.clone()));
        for f in &ch.fields {
            cfg.set(&f.component_id, &f.field, self.model.value(f.reg)).expect("register fits its field");
        }
        Ok(cfg)
    }

    /// Runs one cycle: the controller drives the chain ports, the model
    /// settles, injector activity is logged and the clock edge commits.
    pub fn step(&mut self, inputs: &[(SignalId, u64)], sample: &[SignalId]) -> Result<Vec<u64>, SimError> {
        let mut drive = inputs.to_vec();
        for (i, ch) in self.chains.iter().enumerate() {
            let s = &mut self.state[i];
            let (en, bit) = if let Some(b) = s.shift.pop_front() {
                (1, b)
            } else if s.rotate > 0 {
                // scan_out is bit 0 of the first field.
                let b = self.model.value(ch.fields[0].reg) & 1 == 1;
                s.captured.push(b);
                s.rotate -= 1;
                (1, b)
            } else {
                (0, false)
            };
            drive.push((ch.scan_en, en));
            drive.push((ch.scan_in, u64::from(bit)));
            drive.push((ch.global_en, u64::from(s.enabled)));
        }
        for &(id, v) in &drive {
            self.model.set_input(id, v)?;
        }
        self.model.settle();
        let cycle = self.model.cycle();
        for ch in &self.chains {
            for p in &ch.injectors {
                let (orig, out) = (self.model.value(p.input), self.model.value(p.output));
                if orig != out {
                    self.log.push(FaultEvent {
                        cycle,
                        chain_id: ch.chain_id.clone(),
                        component_id: p.component_id.clone(),
                        original_value: orig,
                        faulted_value: out,
                    });
                }
            }
        }
        let out = sample.iter().map(|&id| self.model.value(id)).collect();
        self.model.commit();
        Ok(out)
    }

    pub fn fault_log(&self) -> &[FaultEvent] {
        &self.log
    }

    pub fn take_fault_log(&mut self) -> Vec<FaultEvent> {
        std::mem::take(&mut self.log)
    }

}

impl From<ConfigError> for SimError {
    fn from(e: ConfigError) -> Self {
        SimError::Config(e)
    }
}
