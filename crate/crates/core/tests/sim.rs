use std::sync::Arc;

use nail_core::injectors::InjectorKind;
use nail_core::nir::{parse_circuit, Circuit};
use nail_core::scanchain::{PackedConfig, ScanChainDescriptor, ScanConfig};
use nail_core::sim::{
    elaborate, run_campaign, run_golden, FaultEvent, Harness, LoadMode, Schedule, SimError, Stimulus,
};
use nail_core::transforms::{instrument, FaultAnnotation};
use rand::{Rng, SeedableRng};

const ENABLE_AT: u64 = 140;
const DISABLE_AT: u64 = 237;

fn regfile() -> Circuit {
    parse_circuit(include_str!("../../../fixtures/regfile.nir")).unwrap()
}

fn stimulus() -> Stimulus {
    Stimulus::from_json(include_str!("../../../fixtures/regfile_stimulus.json")).unwrap()
}

fn instrumented() -> (Circuit, ScanChainDescriptor) {
    let ann = FaultAnnotation::new("rf_wdata", InjectorKind::StuckAt, "rocket")
        .with_condition("($sf(targetAddr,5) == rf_waddr) && rf_wen");
    let (c, mut d) = instrument(&regfile(), &[ann]).unwrap();
    (c, d.remove(0))
}

fn config(d: &ScanChainDescriptor, target: u64) -> PackedConfig {
    let mut cfg = ScanConfig::new(Arc::new(d.clone()));
    cfg.set("rf_wdata_cond", "isActive", 1).unwrap();
    cfg.set("rf_wdata_cond", "targetAddr", target).unwrap();
    cfg.set("rf_wdata_inj", "isActive", 1).unwrap();
    cfg.set("rf_wdata_inj", "mask", u64::MAX).unwrap();
    cfg.set("rf_wdata_inj", "stuckValue", 0xC0FFEE).unwrap();
    cfg.pack()
}

/// Cycle at which `raddr` is set to `reg` during the read-back phase.
fn read_cycle(stim: &Stimulus, reg: u64) -> Vec<u64> {
    stim.inputs.iter().filter(|c| c.set.get("raddr") == Some(&reg)).map(|c| c.cycle).collect()
}

fn schedule() -> Schedule {
    Schedule { load_cycle: 0, enable_cycle: ENABLE_AT, disable_cycle: Some(DISABLE_AT) }
}

#[test]
fn regfile_campaign_faults_x15_only() {
    let (inst, d) = instrumented();
    let stim = stimulus();
    let r = run_campaign(&regfile(), &inst, &[("rocket".into(), config(&d, 15))], &stim, &schedule(), LoadMode::Serial)
        .unwrap();
    let rdata = r.faulty.column("rdata").unwrap();
    let golden = r.golden.column("rdata").unwrap();
    for reg in 1..=31u64 {
        let c = read_cycle(&stim, reg)[0] as usize;
        if reg == 15 {
            assert_eq!(rdata[c], 0xC0FFEE);
            assert_eq!(golden[c], 0x1234);
        } else {
            assert_eq!(rdata[c], 0x1111_0000 + reg, "x{reg}");
        }
    }
    // After disable, x15 takes new writes normally.
    let late = *read_cycle(&stim, 15).last().unwrap() as usize;
    assert!(late as u64 > DISABLE_AT);
    assert_eq!(rdata[late], 0x5678);

    assert!(r.report.diverged);
    assert_eq!(r.report.cycle, Some(read_cycle(&stim, 15)[0]));
    assert_eq!(r.report.signals, ["rdata"]);
    assert!(!r.log.is_empty());
    assert!(r.log.iter().all(|e| e.faulted_value == 0xC0FFEE && e.original_value == 0x1234));
}

#[test]
fn non_matching_target_never_fires() {
    let (inst, d) = instrumented();
    let mut stim = Stimulus::new(200);
    stim.set(0, "rf_wen", 0).set(0, "waddr", 0).set(0, "wdata", 0).set(0, "raddr", 0);
    stim.set(150, "rf_wen", 1).set(150, "waddr", 15).set(150, "wdata", 0x1234).set(153, "rf_wen", 0);
    stim.set(160, "raddr", 15);
    let r = run_campaign(&regfile(), &inst, &[("rocket".into(), config(&d, 7))], &stim, &schedule(), LoadMode::Serial)
        .unwrap();
    assert!(r.log.is_empty());
    assert!(!r.report.diverged);
}

#[test]
fn zero_config_preserves_behavior() {
    let (inst, d) = instrumented();
    let zero = ScanConfig::new(Arc::new(d)).pack();
    let mut rng = rand::rngs::StdRng::seed_from_u64(7);
    for _ in 0..20 {
        let mut stim = Stimulus::new(60);
        for c in 0..60 {
            stim.set(c, "rf_wen", rng.gen_range(0..2))
                .set(c, "waddr", rng.gen_range(0..32))
                .set(c, "wdata", rng.gen())
                .set(c, "raddr", rng.gen_range(0..32));
        }
        let s = Schedule { load_cycle: 0, enable_cycle: 0, disable_cycle: None };
        let r = run_campaign(&regfile(), &inst, &[("rocket".into(), zero.clone())], &stim, &s, LoadMode::Broadside)
            .unwrap();
        assert!(!r.report.diverged);
        assert!(r.log.is_empty());
    }
}

#[test]
fn serial_load_takes_total_width_cycles() {
    let (inst, d) = instrumented();
    let p = config(&d, 15);
    let mut h = Harness::new(&inst).unwrap();
    h.load("rocket", &p, LoadMode::Serial).unwrap();
    for _ in 0..d.total_width - 1 {
        h.step(&[], &[]).unwrap();
    }
    assert!(h.busy("rocket").unwrap());
    h.step(&[], &[]).unwrap();
    assert!(!h.busy("rocket").unwrap());
    let state = h.scan_state("rocket").unwrap();
    assert_eq!(state.get("rf_wdata_cond", "targetAddr").unwrap(), 15);
    assert_eq!(state.get("rf_wdata_inj", "stuckValue").unwrap(), 0xC0FFEE);
    assert_eq!(state.pack(), p);
}

#[test]
fn corrupted_and_enabled_loads_rejected() {
    let (inst, d) = instrumented();
    let mut p = config(&d, 15);
    p.payload[3] ^= 0x10;
    let mut h = Harness::new(&inst).unwrap();
    assert!(matches!(h.load("rocket", &p, LoadMode::Broadside), Err(SimError::Config(_))));
    assert_eq!(h.scan_state("rocket").unwrap().pack(), ScanConfig::new(Arc::new(d.clone())).pack());

    h.enable("rocket", true).unwrap();
    assert!(matches!(h.load("rocket", &config(&d, 15), LoadMode::Serial), Err(SimError::LoadWhileEnabled(_))));
}

#[test]
fn discovered_descriptor_matches_instrumented() {
    let (inst, d) = instrumented();
    let h = Harness::new(&inst).unwrap();
    assert_eq!(h.chains().len(), 1);
    assert_eq!(h.chain("rocket").unwrap().descriptor, d);
}

#[test]
fn register_target_stores_faulted_value() {
    let c = parse_circuit("circuit r: module r: input d: UInt<4> output y: UInt<4> reg q: UInt<4> init 0 q <= d y <= q")
        .unwrap();
    let (inst, descs) = instrument(&c, &[FaultAnnotation::new("q", InjectorKind::StuckAt, "c")]).unwrap();
    let mut cfg = ScanConfig::new(Arc::new(descs[0].clone()));
    cfg.set("q_inj", "isActive", 1).unwrap();
    cfg.set("q_inj", "mask", 0b0011).unwrap();
    cfg.set("q_inj", "stuckValue", 0b0001).unwrap();
    let mut h = Harness::new(&inst).unwrap();
    h.load("c", &cfg.pack(), LoadMode::Broadside).unwrap();
    h.enable("c", true).unwrap();
    let (d, y) = (h.model().signal("d").unwrap(), h.model().signal("y").unwrap());
    let ys: Vec<u64> = (0..3).map(|_| h.step(&[(d, 0b1110)], &[y]).unwrap()[0]).collect();
    // Enable visible at cycle 1, stored on its edge, seen at cycle 2.
    assert_eq!(ys, [0, 0b1110, 0b1101]);
}

#[test]
fn fault_log_is_json_lines_ready() {
    let e = FaultEvent { cycle: 3, chain_id: "c".into(), component_id: "x_inj".into(), original_value: 1, faulted_value: 2 };
    assert_eq!(
        serde_json::to_string(&e).unwrap(),
        r#"{"cycle":3,"chainId":"c","componentId":"x_inj","originalValue":1,"faultedValue":2}"#
    );
}

#[test]
fn elaborate_names_and_memory() {
    let m = elaborate(&regfile()).unwrap();
    let rf = m.memory("rf").unwrap();
    assert_eq!(rf.len(), 31);
    let nested = parse_circuit(
        "circuit t:
         module b: input a: UInt<1> output y: UInt<1> y <= a
         module a: input a: UInt<1> output y: UInt<1> inst b of b b.a <= a y <= b.y
         module t: input x: UInt<1> output y: UInt<1> inst a of a a.a <= x y <= a.y",
    )
    .unwrap();
    assert!(elaborate(&nested).unwrap().signal("a.b.y").is_ok());
    let pass = parse_circuit("circuit t: module t: input a: UInt<1> output y: UInt<1> y <= a").unwrap();
    let m = elaborate(&pass).unwrap();
    assert_eq!(m.netlist().signals.len(), 2);
    assert!(m.netlist().regs.is_empty());
}

#[test]
fn mux_truth_table() {
    let c = parse_circuit(
        "circuit t: module t: input c: UInt<1> input a: UInt<1> input b: UInt<1> output y: UInt<1> y <= mux(c, a, b)",
    )
    .unwrap();
    let mut m = elaborate(&c).unwrap();
    let [ci, ai, bi, y] = ["c", "a", "b", "y"].map(|p| m.signal(p).unwrap());
    for v in 0..8u64 {
        let (cv, av, bv) = (v >> 2 & 1, v >> 1 & 1, v & 1);
        let out = m.step(&[(ci, cv), (ai, av), (bi, bv)], &[y]).unwrap()[0];
        assert_eq!(out, if cv == 1 { av } else { bv });
    }
}

#[test]
fn golden_requires_cycle_zero_inputs() {
    let mut stim = Stimulus::new(5);
    stim.set(0, "rf_wen", 0);
    assert!(matches!(run_golden(&regfile(), &stim), Err(SimError::Stimulus(_))));
}
