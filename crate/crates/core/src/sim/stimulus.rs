use std::collections::BTreeMap;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use super::SimError;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InputChange {
    pub cycle: u64,
    pub set: IndexMap<String, u64>,
}

/// Input changes over a fixed number of cycles. Inputs keep their value
/// until changed.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Stimulus {
    pub cycles: u64,
    pub inputs: Vec<InputChange>,
}

impl Stimulus {
    pub fn new(cycles: u64) -> Self {
        Stimulus { cycles, inputs: Vec::new() }
    }

    pub fn from_json(text: &str) -> Result<Self, SimError> {
        serde_json::from_str(text).map_err(|e| SimError::Stimulus(e.to_string()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("stimulus serializes")
    }

    /// Records `path = value` from `cycle` on.
    pub fn set(&mut self, cycle: u64, path: &str, value: u64) -> &mut Self {
        match self.inputs.iter_mut().find(|c| c.cycle == cycle) {
            Some(c) => {
                c.set.insert(path.to_string(), value);
            }
            None => {
                let mut set = IndexMap::new();
                set.insert(path.to_string(), value);
                self.inputs.push(InputChange { cycle, set });
            }
        }
        self
    }

    /// Changes grouped by cycle, after checking that every input in
    /// `required` is set at cycle 0 and nothing outside the run is set.
    pub fn schedule(&self, required: &[&str]) -> Result<BTreeMap<u64, Vec<(String, u64)>>, SimError> {
        let mut by_cycle: BTreeMap<u64, Vec<(String, u64)>> = BTreeMap::new();
        for c in &self.inputs {
            if c.cycle >= self.cycles {
                return Err(SimError::Stimulus(format!("change at cycle {} beyond run of {}", c.cycle, self.cycles)));
            }
            by_cycle.entry(c.cycle).or_default().extend(c.set.iter().map(|(k, v)| (k.clone(), *v)));
        }
        let first = by_cycle.get(&0);
        for r in required {
            if !first.is_some_and(|f| f.iter().any(|(k, _)| k == r)) {
                return Err(SimError::Stimulus(format!("input `{r}` has no value at cycle 0")));
            }
        }
        Ok(by_cycle)
    }
}
