//! Fibonacci LFSRs.
//!
//! Tap `t` of an `n`-bit register reads bit `n - t`; the feedback bit is
//! shifted in at the top while the register shifts right.

use thiserror::Error;

/// Taps of the 32-bit generator used by probabilistic injectors
/// (x^32 + x^22 + x^2 + x + 1).
pub const TAPS_32: [u32; 4] = [32, 22, 2, 1];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Fibonacci {
    width: u32,
    taps: Vec<u32>,
}

impl Fibonacci {
    /// `taps` are 1-based positions; the largest must equal `width`.
    pub fn new(width: u32, taps: &[u32]) -> Self {
        assert!((2..=64).contains(&width), "lfsr width out of range");
        assert!(taps.iter().all(|&t| (1..=width).contains(&t)), "tap out of range");
        assert!(taps.contains(&width), "taps must include the register width");
        Fibonacci { width, taps: taps.to_vec() }
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn next(&self, state: u64) -> u64 {
        let fb = self.taps.iter().fold(0, |acc, &t| acc ^ (state >> (self.width - t))) & 1;
        (state >> 1) | (fb << (self.width - 1))
    }

    /// Steps until `seed` recurs; `None` if it never does within 2^width steps.
    pub fn period(&self, seed: u64) -> Option<u64> {
        let limit = 1u64 << self.width.min(63);
        let mut s = self.next(seed);
        let mut n = 1;
        while s != seed {
            if n >= limit {
                return None;
            }
            s = self.next(s);
            n += 1;
        }
        Some(n)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
#[error("an LFSR seed of zero locks the generator")]
pub struct ZeroSeed;

/// State of the 32-bit injector LFSR; never zero.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct LfsrState(u32);

impl LfsrState {
    pub fn new(seed: u32) -> Result<Self, ZeroSeed> {
        if seed == 0 {
            Err(ZeroSeed)
        } else {
            Ok(LfsrState(seed))
        }
    }

    pub fn value(self) -> u32 {
        self.0
    }

    pub fn next(self) -> Self {
        let s = self.0;
        let fb = (s ^ (s >> 10) ^ (s >> 30) ^ (s >> 31)) & 1;
        LfsrState((s >> 1) | (fb << 31))
    }
}

impl Default for LfsrState {
    fn default() -> Self {
        LfsrState(1)
    }
}
