use crate::nir::flatten::{CombAssign, FlatNetlist, SignalId, SignalKind};
use crate::nir::{flatten, mask, validate_circuit, Circuit};

use super::SimError;

/// Two-phase cycle interpreter over a flattened circuit.
///
/// Each cycle: apply inputs, settle the combinational network in
/// topological order, sample, then commit every register and memory write
/// from the settled values.
#[derive(Debug, Clone)]
pub struct SimModel {
    net: FlatNetlist,
    order: Vec<usize>,
    values: Vec<u64>,
    mems: Vec<Vec<u64>>,
    cycle: u64,
    settled: bool,
}

pub fn elaborate(c: &Circuit) -> Result<SimModel, SimError> {
    let diags = validate_circuit(c);
    if !diags.is_empty() {
        return Err(SimError::Invalid(diags));
    }
    let net = flatten(c).map_err(|d| SimError::Invalid(vec![d]))?;
    let order = net.comb_order().expect("validated circuits are acyclic");
    let values = net
        .signals
        .iter()
        .map(|s| match s.kind {
            SignalKind::Reg { init } => init,
            _ => 0,
        })
        .collect();
    let mems = net.mems.iter().map(|m| vec![0; m.depth as usize]).collect();
    Ok(SimModel { net, order, values, mems, cycle: 0, settled: false })
}

impl SimModel {
    pub fn netlist(&self) -> &FlatNetlist {
        &self.net
    }

    pub fn cycle(&self) -> u64 {
        self.cycle
    }

    pub fn signal(&self, path: &str) -> Result<SignalId, SimError> {
        self.net.signal(path).ok_or_else(|| SimError::UnknownSignal(path.to_string()))
    }

    /// Current value; combinational signals reflect the last settle.
    pub fn value(&self, id: SignalId) -> u64 {
        self.values[id]
    }

    pub fn get(&self, path: &str) -> Result<u64, SimError> {
        Ok(self.values[self.signal(path)?])
    }

    pub fn memory(&self, path: &str) -> Option<&[u64]> {
        self.net.mem_index.get(path).map(|&i| self.mems[i].as_slice())
    }

    pub fn set_input(&mut self, id: SignalId, value: u64) -> Result<(), SimError> {
        let s = &self.net.signals[id];
        if s.kind != SignalKind::Input {
            return Err(SimError::NotAnInput(s.path.clone()));
        }
        if value & !mask(s.width) != 0 {
            return Err(SimError::InputRange { path: s.path.clone(), width: s.width, value });
        }
        self.values[id] = value;
        self.settled = false;
        Ok(())
    }

    /// Overwrites a register between cycles.
    pub fn force_reg(&mut self, id: SignalId, value: u64) {
        let s = &self.net.signals[id];
        assert!(matches!(s.kind, SignalKind::Reg { .. }), "`{}` is not a register", s.path);
        self.values[id] = value & mask(s.width);
        self.settled = false;
    }

    /// Evaluates the combinational network from current inputs and state.
    pub fn settle(&mut self) {
        for &i in &self.order {
            match &self.net.comb[i] {
                CombAssign::Expr { dst, expr } => self.values[*dst] = expr.eval(&self.values),
                CombAssign::MemRead { dst, mem, addr } => {
                    let a = addr.eval(&self.values);
                    self.values[*dst] = usize::try_from(a).ok().and_then(|a| self.mems[*mem].get(a)).copied().unwrap_or(0);
                }
            }
        }
        self.settled = true;
    }

    /// Clock edge: commits register and memory updates computed from the
    /// settled pre-edge values.
    pub fn commit(&mut self) {
        if !self.settled {
            self.settle();
        }
        let next: Vec<(SignalId, u64)> = self.net.regs.iter().map(|r| (r.reg, r.expr.eval(&self.values))).collect();
        let writes: Vec<(usize, u64, u64)> = self
            .net
            .writes
            .iter()
            .filter(|w| w.en.eval(&self.values) != 0)
            .map(|w| (w.mem, w.addr.eval(&self.values), w.data.eval(&self.values)))
            .collect();
        for (id, v) in next {
            self.values[id] = v & mask(self.net.signals[id].width);
        }
        for (mem, addr, data) in writes {
            if let Some(cell) = usize::try_from(addr).ok().and_then(|a| self.mems[mem].get_mut(a)) {
                *cell = data;
            }
        }
        self.cycle += 1;
        self.settled = false;
    }

    /// One full cycle with the given input changes; returns the settled
    /// values of `sample` taken before the edge.
    pub fn step(&mut self, inputs: &[(SignalId, u64)], sample: &[SignalId]) -> Result<Vec<u64>, SimError> {
        for &(id, v) in inputs {
            self.set_input(id, v)?;
        }
        self.settle();
        let out = sample.iter().map(|&id| self.values[id]).collect();
        self.commit();
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nir::parse_circuit;

    #[test]
    fn counter_counts() {
        let c = parse_circuit("circuit t: module t: output y: UInt<8> reg q: UInt<8> init 0 q <= add(q, UInt<8>(1)) y <= q")
            .unwrap();
        let mut m = elaborate(&c).unwrap();
        let y = m.signal("y").unwrap();
        let trace: Vec<u64> = (0..3).map(|_| m.step(&[], &[y]).unwrap()[0]).collect();
        assert_eq!(trace, [0, 1, 2]);
    }

    #[test]
    fn read_during_write_sees_old_value() {
        let c = parse_circuit(
            "circuit t: module t: input a: UInt<2> input d: UInt<8> input we: UInt<1> output y: UInt<8>
             mem m: UInt<8>[4] read y <= m[a] write m[a] <= d when we",
        )
        .unwrap();
        let mut sim = elaborate(&c).unwrap();
        let [a, d, we, y] = ["a", "d", "we", "y"].map(|p| sim.signal(p).unwrap());
        assert_eq!(sim.step(&[(a, 2), (d, 7), (we, 1)], &[y]).unwrap(), [0]);
        assert_eq!(sim.step(&[(we, 0)], &[y]).unwrap(), [7]);
    }

    #[test]
    fn input_width_checked() {
        let c = parse_circuit("circuit t: module t: input a: UInt<2> output y: UInt<2> y <= a").unwrap();
        let mut sim = elaborate(&c).unwrap();
        let a = sim.signal("a").unwrap();
        assert!(matches!(sim.set_input(a, 4), Err(SimError::InputRange { .. })));
    }
}
