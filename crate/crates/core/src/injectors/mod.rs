//! Injector and conditioner components: scan-field layouts, cycle-level fault
//! semantics, and the NIR templates that implement them.
//!
//! Every component carries an `isActive` scan field first. The enable path
//! from the controller passes through exactly one register: the conditioner
//! holds it when one is attached, otherwise the injector does. The data path
//! through the fault logic is combinational.

mod lfsr;
mod model;
pub mod template;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::nir::{mask, Width};

pub use lfsr::{Fibonacci, LfsrState, ZeroSeed, TAPS_32};
pub use model::InjectorModel;

pub const IS_ACTIVE: &str = "isActive";
pub const MASK: &str = "mask";
pub const STUCK_VALUE: &str = "stuckValue";
pub const SEED: &str = "seed";
pub const THRESHOLD: &str = "threshold";
pub const START_CYCLE: &str = "startCycle";
pub const DURATION: &str = "duration";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum InjectorKind {
    StuckAt,
    LfsrFlip,
    CycleWindow,
}

impl InjectorKind {
    pub const ALL: [InjectorKind; 3] = [InjectorKind::StuckAt, InjectorKind::LfsrFlip, InjectorKind::CycleWindow];

    pub fn as_str(self) -> &'static str {
        match self {
            InjectorKind::StuckAt => "stuckAt",
            InjectorKind::LfsrFlip => "lfsrFlip",
            InjectorKind::CycleWindow => "cycleWindow",
        }
    }

    /// Scan fields for a target of `width` bits, in chain order.
    pub fn layout(self, width: Width) -> Vec<(&'static str, Width)> {
        match self {
            InjectorKind::StuckAt => vec![(IS_ACTIVE, 1), (MASK, width), (STUCK_VALUE, width)],
            InjectorKind::LfsrFlip => vec![(IS_ACTIVE, 1), (SEED, 32), (THRESHOLD, 32), (MASK, width)],
            InjectorKind::CycleWindow => vec![(IS_ACTIVE, 1), (START_CYCLE, 32), (DURATION, 32), (MASK, width)],
        }
    }
}

impl fmt::Display for InjectorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown injector kind `{0}` (expected stuckAt, lfsrFlip or cycleWindow)")]
pub struct UnknownKind(pub String);

impl FromStr for InjectorKind {
    type Err = UnknownKind;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL.into_iter().find(|k| k.as_str() == s).ok_or_else(|| UnknownKind(s.to_string()))
    }
}

/// Configured fault parameters of one injector (everything but `isActive`).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InjectorParams {
    StuckAt { mask: u64, value: u64 },
    /// `threshold` is compared against the advanced LFSR state; values above
    /// `u32::MAX` are accepted here and mean "always".
    LfsrFlip { seed: u32, threshold: u64, mask: u64 },
    CycleWindow { start: u32, duration: u32, mask: u64 },
}

impl InjectorParams {
    pub fn kind(&self) -> InjectorKind {
        match self {
            InjectorParams::StuckAt { .. } => InjectorKind::StuckAt,
            InjectorParams::LfsrFlip { .. } => InjectorKind::LfsrFlip,
            InjectorParams::CycleWindow { .. } => InjectorKind::CycleWindow,
        }
    }

    /// Builds parameters from named scan-field values; missing fields read 0.
    pub fn from_fields(kind: InjectorKind, get: impl Fn(&str) -> u64) -> Self {
        match kind {
            InjectorKind::StuckAt => InjectorParams::StuckAt { mask: get(MASK), value: get(STUCK_VALUE) },
            InjectorKind::LfsrFlip => InjectorParams::LfsrFlip {
                seed: get(SEED) as u32,
                threshold: get(THRESHOLD),
                mask: get(MASK),
            },
            InjectorKind::CycleWindow => InjectorParams::CycleWindow {
                start: get(START_CYCLE) as u32,
                duration: get(DURATION) as u32,
                mask: get(MASK),
            },
        }
    }

    pub fn mask(&self) -> u64 {
        match *self {
            InjectorParams::StuckAt { mask, .. }
            | InjectorParams::LfsrFlip { mask, .. }
            | InjectorParams::CycleWindow { mask, .. } => mask,
        }
    }
}

/// Faulted value for one enabled cycle.
///
/// `cycle` counts cycles since the global enable last rose (0 on the first
/// cycle the fault can be visible). The LFSR is advanced only by `LfsrFlip`.
pub fn fault_value(params: &InjectorParams, original: u64, cycle: u64, lfsr: LfsrState) -> (u64, LfsrState) {
    match *params {
        InjectorParams::StuckAt { mask, value } => ((original & !mask) | (value & mask), lfsr),
        InjectorParams::LfsrFlip { threshold, mask, .. } => {
            let next = lfsr.next();
            let faulted = if u64::from(next.value()) < threshold { original ^ mask } else { original };
            (faulted, next)
        }
        InjectorParams::CycleWindow { start, duration, mask } => {
            let start = u64::from(start);
            let in_window = start <= cycle && cycle < start + u64::from(duration);
            (if in_window { original ^ mask } else { original }, lfsr)
        }
    }
}

/// Conditioner inputs for one cycle.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ConditionerGate {
    pub is_active: bool,
    pub condition: bool,
}

/// One step of the enable path.
///
/// Returns `(enable, next_buffer)`: `enable` drives the data mux this cycle
/// from the previously buffered value; `next_buffer` is latched at the edge.
/// An inactive conditioner forces the injector off.
pub fn effective_enable(
    global_enable: bool,
    conditioner: Option<ConditionerGate>,
    inj_active: bool,
    prev_buffer: bool,
) -> (bool, bool) {
    let gate = conditioner.is_none_or(|c| c.is_active && c.condition);
    (prev_buffer && inj_active, global_enable && gate)
}

/// Applies the data mux: `original` unless enabled, restricted to `width` bits.
pub fn apply(enable: bool, faulted: u64, original: u64, width: Width) -> u64 {
    if enable {
        faulted & mask(width)
    } else {
        original
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stuck_at_formula() {
        let p = InjectorParams::StuckAt { mask: 0x0F, value: 0x05 };
        assert_eq!(fault_value(&p, 0xFF, 0, LfsrState::default()).0, 0xF5);
    }

    #[test]
    fn stuck_at_full_mask_forces_value() {
        let p = InjectorParams::StuckAt { mask: u64::MAX, value: 0xC0FFEE };
        for orig in [0, 0x1234, u64::MAX, 0xDEAD_BEEF_0000_0001] {
            assert_eq!(fault_value(&p, orig, 0, LfsrState::default()).0, 0xC0FFEE);
        }
    }

    #[test]
    fn lfsr_threshold_bounds() {
        let never = InjectorParams::LfsrFlip { seed: 1, threshold: 0, mask: 0xFF };
        let always = InjectorParams::LfsrFlip { seed: 1, threshold: 1 << 32, mask: 0xFF };
        let (mut a, mut b) = (LfsrState::default(), LfsrState::default());
        for _ in 0..500 {
            let (f, n) = fault_value(&never, 0x3C, 0, a);
            assert_eq!(f, 0x3C);
            a = n;
            let (f, n) = fault_value(&always, 0x3C, 0, b);
            assert_eq!(f, 0x3C ^ 0xFF);
            b = n;
        }
        assert_eq!(a, b);
    }

    #[test]
    fn cycle_window_bounds() {
        let p = InjectorParams::CycleWindow { start: 3, duration: 2, mask: 1 };
        let hits: Vec<u64> = (0..8).filter(|&c| fault_value(&p, 0, c, LfsrState::default()).0 == 1).collect();
        assert_eq!(hits, vec![3, 4]);
    }

    #[test]
    fn enable_buffer_equations() {
        // No conditioner: buffer follows the global enable.
        assert_eq!(effective_enable(true, None, true, false), (false, true));
        assert_eq!(effective_enable(false, None, true, true), (true, false));
        // Injector isActive gates combinationally on the buffered value.
        assert_eq!(effective_enable(true, None, false, true), (false, true));
        // Inactive conditioner forces the injector off.
        let off = ConditionerGate { is_active: false, condition: true };
        assert_eq!(effective_enable(true, Some(off), true, false), (false, false));
        let on = ConditionerGate { is_active: true, condition: true };
        assert_eq!(effective_enable(true, Some(on), true, false), (false, true));
    }

    #[test]
    fn layouts() {
        assert_eq!(InjectorKind::StuckAt.layout(8).iter().map(|f| f.1).sum::<u32>(), 17);
        assert_eq!(InjectorKind::LfsrFlip.layout(8).iter().map(|f| f.1).sum::<u32>(), 73);
        assert_eq!(InjectorKind::CycleWindow.layout(1).iter().map(|f| f.1).sum::<u32>(), 66);
        assert_eq!("lfsrFlip".parse::<InjectorKind>().unwrap(), InjectorKind::LfsrFlip);
        assert!("bitFlip".parse::<InjectorKind>().is_err());
    }
}
