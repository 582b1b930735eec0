use crate::nir::{mask, Width};

use super::{apply, effective_enable, fault_value, ConditionerGate, InjectorParams, LfsrState, ZeroSeed};

/// Cycle-level reference model of one injector and its optional conditioner.
///
/// Holds the same state the generated hardware does: the enable buffer, the
/// previous global enable (for edge detection), the window counter and the
/// LFSR. Registers start at their reset values.
#[derive(Debug, Clone)]
pub struct InjectorModel {
    params: InjectorParams,
    width: Width,
    is_active: bool,
    conditioner_active: Option<bool>,
    buffer: bool,
    ge_prev: bool,
    counter: u32,
    lfsr: LfsrState,
    seed: Option<LfsrState>,
}

impl InjectorModel {
    /// `conditioner_active` is `Some(isActive)` when a conditioner is attached.
    pub fn new(
        params: InjectorParams,
        width: Width,
        is_active: bool,
        conditioner_active: Option<bool>,
    ) -> Result<Self, ZeroSeed> {
        let seed = match params {
            InjectorParams::LfsrFlip { seed, .. } => Some(LfsrState::new(seed)?),
            _ => None,
        };
        Ok(InjectorModel {
            params,
            width,
            is_active,
            conditioner_active,
            buffer: false,
            ge_prev: false,
            counter: 0,
            lfsr: LfsrState::default(),
            seed,
        })
    }

    pub fn lfsr(&self) -> LfsrState {
        self.lfsr
    }

    /// Output for this cycle, then advances state across the clock edge.
    /// `condition` is ignored without a conditioner.
    pub fn step(&mut self, global_enable: bool, condition: bool, original: u64) -> u64 {
        let original = original & mask(self.width);
        let gate = self.conditioner_active.map(|is_active| ConditionerGate { is_active, condition });
        let (enable, next_buffer) = effective_enable(global_enable, gate, self.is_active, self.buffer);

        let (faulted, advanced) = if enable {
            fault_value(&self.params, original, u64::from(self.counter), self.lfsr)
        } else {
            (original, self.lfsr)
        };
        let out = apply(enable, faulted, original, self.width);

        let rise = global_enable && !self.ge_prev;
        self.lfsr = match (rise, self.seed) {
            (true, Some(seed)) => seed,
            _ => advanced,
        };
        self.counter = if rise { 0 } else { self.counter.saturating_add(1) };
        self.ge_prev = global_enable;
        self.buffer = next_buffer;
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn stuck() -> InjectorParams {
        InjectorParams::StuckAt { mask: 0xFF, value: 0xAA }
    }

    #[test]
    fn enable_rise_visible_one_cycle_later() {
        let mut m = InjectorModel::new(stuck(), 8, true, None).unwrap();
        let trace: Vec<u64> = (0..5).map(|c| m.step(c >= 2, false, 0x11)).collect();
        assert_eq!(trace, vec![0x11, 0x11, 0x11, 0xAA, 0xAA]);
    }

    #[test]
    fn single_condition_pulse() {
        let mut m = InjectorModel::new(stuck(), 8, true, Some(true)).unwrap();
        let trace: Vec<u64> = (0..5).map(|c| m.step(true, c == 2, 0x11)).collect();
        assert_eq!(trace, vec![0x11, 0x11, 0x11, 0xAA, 0x11]);
    }

    #[test]
    fn inactive_conditioner_blocks() {
        let mut m = InjectorModel::new(stuck(), 8, true, Some(false)).unwrap();
        assert!((0..20).all(|_| m.step(true, true, 0x11) == 0x11));
    }

    #[test]
    fn window_counts_from_first_visible_cycle() {
        let p = InjectorParams::CycleWindow { start: 1, duration: 2, mask: 1 };
        let mut m = InjectorModel::new(p, 1, true, None).unwrap();
        // Enable rises at cycle 3; first visible cycle 4 has count 0.
        let trace: Vec<u64> = (0..9).map(|c| m.step(c >= 3, false, 0)).collect();
        assert_eq!(trace, vec![0, 0, 0, 0, 0, 1, 1, 0, 0]);
    }

    #[test]
    fn lfsr_reseeds_on_enable_edge() {
        let p = InjectorParams::LfsrFlip { seed: 0x1234, threshold: 1 << 31, mask: 1 };
        let mut a = InjectorModel::new(p, 1, true, None).unwrap();
        let first: Vec<u64> = (0..40).map(|c| a.step(c >= 1, false, 0)).collect();
        // Disable, re-enable: same sequence.
        a.step(false, false, 0);
        a.step(false, false, 0);
        let second: Vec<u64> = (0..40).map(|c| a.step(c >= 1, false, 0)).collect();
        assert_eq!(first, second);
    }
}
