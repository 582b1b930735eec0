use std::sync::Arc;

use nail_core::injectors::{
    fault_value, Fibonacci, InjectorKind, InjectorModel, InjectorParams, LfsrState, TAPS_32,
};
use nail_core::nir::{mask, parse_circuit, Circuit};
use nail_core::scanchain::ScanConfig;
use nail_core::sim::{Harness, LoadMode};
use nail_core::transforms::{instrument, FaultAnnotation};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};

fn passthrough(width: u32) -> Circuit {
    parse_circuit(&format!(
        "circuit t: module t: input a: UInt<{width}> input c: UInt<1> output y: UInt<{width}> output z: UInt<1>
         y <= a z <= c"
    ))
    .unwrap()
}

/// Instrumented pass-through `y <= a`, optionally conditioned on input `c`.
struct Rig {
    h: Harness,
    a: usize,
    c: usize,
    y: usize,
}

fn rig(kind: InjectorKind, width: u32, conditioned: bool, fields: &[(&str, u64)], cond_active: bool) -> Rig {
    let mut ann = FaultAnnotation::new("y", kind, "k");
    if conditioned {
        ann = ann.with_condition("c");
    }
    let (inst, descs) = instrument(&passthrough(width), &[ann]).unwrap();
    let mut cfg = ScanConfig::new(Arc::new(descs[0].clone()));
    for (f, v) in fields {
        cfg.set("y_inj", f, *v).unwrap();
    }
    if conditioned {
        cfg.set("y_cond", "isActive", u64::from(cond_active)).unwrap();
    }
    let mut h = Harness::new(&inst).unwrap();
    h.load("k", &cfg.pack(), LoadMode::Broadside).unwrap();
    let [a, c, y] = ["a", "c", "y"].map(|p| h.model().signal(p).unwrap());
    Rig { h, a, c, y }
}

impl Rig {
    fn step(&mut self, ge: bool, cond: bool, a: u64) -> u64 {
        self.h.enable("k", ge).unwrap();
        self.h.step(&[(self.a, a), (self.c, u64::from(cond))], &[self.y]).unwrap()[0]
    }
}

fn random_fields(kind: InjectorKind, width: u32, rng: &mut impl Rng) -> (Vec<(&'static str, u64)>, InjectorParams) {
    let m = rng.gen::<u64>() & mask(width);
    match kind {
        InjectorKind::StuckAt => {
            let v = rng.gen::<u64>() & mask(width);
            (vec![("mask", m), ("stuckValue", v)], InjectorParams::StuckAt { mask: m, value: v })
        }
        InjectorKind::LfsrFlip => {
            let seed = rng.gen_range(1..=u32::MAX);
            let threshold = u64::from(rng.gen::<u32>());
            (
                vec![("seed", u64::from(seed)), ("threshold", threshold), ("mask", m)],
                InjectorParams::LfsrFlip { seed, threshold, mask: m },
            )
        }
        InjectorKind::CycleWindow => {
            let start = rng.gen_range(0..12);
            let duration = rng.gen_range(0..12);
            (
                vec![("startCycle", u64::from(start)), ("duration", u64::from(duration)), ("mask", m)],
                InjectorParams::CycleWindow { start, duration, mask: m },
            )
        }
    }
}

#[test]
fn hardware_matches_reference_model() {
    let mut rng = rand::rngs::StdRng::seed_from_u64(11);
    for kind in InjectorKind::ALL {
        for &width in &[1u32, 7, 64] {
            for conditioned in [false, true] {
                for _ in 0..6 {
                    let (mut fields, params) = random_fields(kind, width, &mut rng);
                    let inj_active = rng.gen_bool(0.8);
                    let cond_active = rng.gen_bool(0.8);
                    fields.push(("isActive", u64::from(inj_active)));
                    let mut hw = rig(kind, width, conditioned, &fields, cond_active);
                    let mut model =
                        InjectorModel::new(params, width, inj_active, conditioned.then_some(cond_active)).unwrap();
                    let mut ge = false;
                    for cycle in 0..80 {
                        if rng.gen_bool(0.1) {
                            ge = !ge;
                        }
                        let cond = rng.gen_bool(0.5);
                        let a = rng.gen::<u64>() & mask(width);
                        let want = model.step(ge, cond, a);
                        let got = hw.step(ge, cond, a);
                        assert_eq!(got, want, "{kind} w{width} cond={conditioned} cycle {cycle}");
                    }
                }
            }
        }
    }
}

/// Output trace of a rig with all-ones input under the given enable and
/// condition sequences.
fn trace(kind: InjectorKind, fields: &[(&str, u64)], conditioned: bool, ge: &[u8], cond: &[u8]) -> Vec<u64> {
    let mut fields = fields.to_vec();
    fields.push(("isActive", 1));
    let mut r = rig(kind, 4, conditioned, &fields, true);
    ge.iter().zip(cond).map(|(&g, &c)| r.step(g == 1, c == 1, 0b1111)).collect()
}

#[test]
fn enable_latency_is_one_cycle() {
    let stuck = [("mask", 0b1111), ("stuckValue", 0)];
    let flip_always = [("seed", 1), ("threshold", u64::from(u32::MAX)), ("mask", 0b0001)];
    let window = [("startCycle", 0), ("duration", 100), ("mask", 0b0001)];
    let kinds: [(InjectorKind, &[(&str, u64)], u64); 3] = [
        (InjectorKind::StuckAt, &stuck, 0),
        (InjectorKind::LfsrFlip, &flip_always, 0b1110),
        (InjectorKind::CycleWindow, &window, 0b1110),
    ];
    let ones = [1u8; 8];
    for (kind, fields, faulted) in kinds {
        // Enable rises at k = 2: first fault at 3.
        let t = trace(kind, fields, false, &[0, 0, 1, 1, 1, 1, 1, 1], &ones);
        assert_eq!(t[..4], [15, 15, 15, faulted], "{kind} enable rise");
        // Enable rises at k = 0.
        let t = trace(kind, fields, false, &[1, 1, 1, 0, 0, 0, 0, 0], &ones);
        assert_eq!(t[..5], [15, faulted, faulted, faulted, 15], "{kind} enable at 0, drop at 3");
        // Condition pulse at k = 4 with enable held.
        let t = trace(kind, fields, true, &[1; 8], &[0, 0, 0, 0, 1, 0, 0, 0]);
        assert_eq!(t, [15, 15, 15, 15, 15, faulted, 15, 15], "{kind} condition pulse");
    }
}

#[test]
fn test_taps_are_maximal() {
    let taps: [(u32, &[u32]); 6] = [(3, &[3, 2]), (4, &[4, 3]), (5, &[5, 3]), (6, &[6, 5]), (7, &[7, 6]), (8, &[8, 6, 5, 4])];
    for (n, t) in taps {
        let l = Fibonacci::new(n, t);
        assert_eq!(l.period(1), Some((1 << n) - 1), "n = {n}");
        // Exhaustive: every nonzero state lies on the one cycle.
        let mut seen = vec![false; 1 << n];
        let mut s = 1u64;
        for _ in 0..(1u64 << n) - 1 {
            assert!(!seen[s as usize]);
            seen[s as usize] = true;
            s = l.next(s);
        }
        assert_eq!(s, 1);
        assert!(!seen[0]);
    }
}

#[test]
fn production_taps_match_generic_step() {
    let l = Fibonacci::new(32, &TAPS_32);
    let mut s = LfsrState::new(0xACE1).unwrap();
    let mut g = 0xACE1u64;
    for _ in 0..1000 {
        s = s.next();
        g = l.next(g);
        assert_eq!(u64::from(s.value()), g);
        assert_ne!(g, 0);
    }
}

#[test]
fn flip_frequency_within_three_sigma() {
    let n = 100_000u64;
    for k in [28u32, 30, 31] {
        let threshold = 1u64 << k;
        let params = InjectorParams::LfsrFlip { seed: 1, threshold, mask: 1 };
        let mut lfsr = LfsrState::new(1).unwrap();
        let mut flips = 0u64;
        for cycle in 0..n {
            let (out, next) = fault_value(&params, 0, cycle, lfsr);
            lfsr = next;
            flips += out;
        }
        let p = threshold as f64 / 2f64.powi(32);
        let mean = n as f64 * p;
        let sigma = (n as f64 * p * (1.0 - p)).sqrt();
        assert!((flips as f64 - mean).abs() <= 3.0 * sigma, "threshold 2^{k}: {flips} vs {mean} ± {}", 3.0 * sigma);
    }
}

#[test]
fn threshold_boundaries() {
    let lfsr = LfsrState::new(5).unwrap();
    let never = InjectorParams::LfsrFlip { seed: 5, threshold: 0, mask: 0xFF };
    let always = InjectorParams::LfsrFlip { seed: 5, threshold: 1 << 32, mask: 0xFF };
    let (mut a, mut b) = (lfsr, lfsr);
    for c in 0..1000 {
        let (x, na) = fault_value(&never, 0x3C, c, a);
        let (y, nb) = fault_value(&always, 0x3C, c, b);
        assert_eq!((x, y), (0x3C, 0xC3));
        a = na;
        b = nb;
    }
}

#[test]
fn stuck_at_algebra_fuzz() {
    let mut rng = rand::rngs::StdRng::seed_from_u64(5);
    for width in [1u32, 8, 64] {
        for _ in 0..10_000 {
            let m = mask(width);
            let (orig, msk, val) = (rng.gen::<u64>() & m, rng.gen::<u64>() & m, rng.gen::<u64>() & m);
            let p = InjectorParams::StuckAt { mask: msk, value: val };
            let (f, _) = fault_value(&p, orig, 0, LfsrState::default());
            assert_eq!(f, (orig & !msk) | (val & msk));
            assert_eq!(f & !msk, orig & !msk);
        }
    }
}

fn arb_params() -> impl Strategy<Value = InjectorParams> {
    prop_oneof![
        (any::<u64>(), any::<u64>()).prop_map(|(mask, value)| InjectorParams::StuckAt { mask, value }),
        (1..=u32::MAX, 0..=(1u64 << 32), any::<u64>())
            .prop_map(|(seed, threshold, mask)| InjectorParams::LfsrFlip { seed, threshold, mask }),
        (any::<u32>(), any::<u32>(), any::<u64>())
            .prop_map(|(start, duration, mask)| InjectorParams::CycleWindow { start, duration, mask }),
    ]
}

proptest! {
    #[test]
    fn mask_locality(p in arb_params(), orig in any::<u64>(), cycle in 0u64..1 << 33, seed in 1..=u32::MAX) {
        let (f, _) = fault_value(&p, orig, cycle, LfsrState::new(seed).unwrap());
        prop_assert_eq!(f & !p.mask(), orig & !p.mask());
    }

    #[test]
    fn stuck_at_idempotent(mask in any::<u64>(), value in any::<u64>(), orig in any::<u64>()) {
        let p = InjectorParams::StuckAt { mask, value };
        let (once, l) = fault_value(&p, orig, 0, LfsrState::default());
        let (twice, _) = fault_value(&p, once, 0, l);
        prop_assert_eq!(once, twice);
    }

    #[test]
    fn disabled_is_transparent(p in arb_params(), inputs in proptest::collection::vec(any::<u64>(), 1..50)) {
        let mut m = InjectorModel::new(p, 64, true, None).unwrap();
        for a in inputs {
            prop_assert_eq!(m.step(false, true, a), a);
        }
    }
}
