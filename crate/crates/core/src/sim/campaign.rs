use std::collections::BTreeMap;
use std::thread;

use serde::{Deserialize, Serialize};

use crate::nir::flatten::SignalId;
use crate::nir::Circuit;
use crate::scanchain::PackedConfig;

use super::controller::{FaultEvent, Harness, LoadMode};
use super::model::elaborate;
use super::stimulus::Stimulus;
use super::trace::{diff_runs, DivergenceReport, Trace};
use super::SimError;

/// Controller commands issued at the start of the given cycles.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Schedule {
    pub load_cycle: u64,
    pub enable_cycle: u64,
    pub disable_cycle: Option<u64>,
}

#[derive(Debug, Clone)]
pub struct CampaignResult {
    pub log: Vec<FaultEvent>,
    pub report: DivergenceReport,
    pub golden: Trace,
    pub faulty: Trace,
}

/// Names of the top-level inputs and outputs of `c`, in port order.
fn top_ports(c: &Circuit) -> (Vec<String>, Vec<String>) {
    let top = c.top_module().expect("validated circuit");
    let names = |dir| top.ports.iter().filter(|p| p.direction == dir).map(|p| p.name.clone()).collect();
    (names(crate::nir::Direction::Input), names(crate::nir::Direction::Output))
}

type Changes = BTreeMap<u64, Vec<(String, u64)>>;

fn resolve_changes(
    changes: &Changes,
    lookup: impl Fn(&str) -> Result<SignalId, SimError>,
) -> Result<BTreeMap<u64, Vec<(SignalId, u64)>>, SimError> {
    changes
        .iter()
        .map(|(c, sets)| Ok((*c, sets.iter().map(|(p, v)| Ok((lookup(p)?, *v))).collect::<Result<_, SimError>>()?)))
        .collect()
}

/// Runs `c` without any controller and records its outputs.
pub fn run_golden(c: &Circuit, stim: &Stimulus) -> Result<Trace, SimError> {
    let (inputs, outputs) = top_ports(c);
    let required: Vec<&str> = inputs.iter().map(String::as_str).collect();
    let mut m = elaborate(c)?;
    let changes = resolve_changes(&stim.schedule(&required)?, |p| m.signal(p))?;
    let sample = outputs.iter().map(|p| m.signal(p)).collect::<Result<Vec<_>, _>>()?;
    let mut trace = Trace::new(outputs);
    for cycle in 0..stim.cycles {
        let ins = changes.get(&cycle).map(Vec::as_slice).unwrap_or(&[]);
        trace.values.push(m.step(ins, &sample)?);
    }
    Ok(trace)
}

/// Runs an instrumented circuit under the controller, sampling the given
/// outputs. Chain ports are owned by the controller.
pub fn run_faulty(
    c: &Circuit,
    configs: &[(String, PackedConfig)],
    stim: &Stimulus,
    schedule: &Schedule,
    mode: LoadMode,
    outputs: &[String],
    required: &[&str],
) -> Result<(Trace, Vec<FaultEvent>), SimError> {
    let mut h = Harness::new(c)?;
    let owned: Vec<SignalId> = h.chains().iter().flat_map(|ch| [ch.scan_in, ch.scan_en, ch.global_en]).collect();
    let changes = resolve_changes(&stim.schedule(required)?, |p| {
        let id = h.model().signal(p)?;
        if owned.contains(&id) {
            return Err(SimError::Stimulus(format!("`{p}` is driven by the scan controller")));
        }
        Ok(id)
    })?;
    let sample = outputs.iter().map(|p| h.model().signal(p)).collect::<Result<Vec<_>, _>>()?;
    let mut trace = Trace::new(outputs.to_vec());
    for cycle in 0..stim.cycles {
        for (chain, cfg) in configs {
            if cycle == schedule.load_cycle {
                h.load(chain, cfg, mode)?;
            }
            if schedule.disable_cycle == Some(cycle) {
                h.enable(chain, false)?;
            } else if cycle == schedule.enable_cycle {
                h.enable(chain, true)?;
            }
        }
        let ins = changes.get(&cycle).map(Vec::as_slice).unwrap_or(&[]);
        trace.values.push(h.step(ins, &sample)?);
    }
    Ok((trace, h.take_fault_log()))
}

/// Golden and faulty runs on identical stimulus, executed in parallel, and
/// their first divergence.
pub fn run_campaign(
    baseline: &Circuit,
    instrumented: &Circuit,
    configs: &[(String, PackedConfig)],
    stim: &Stimulus,
    schedule: &Schedule,
    mode: LoadMode,
) -> Result<CampaignResult, SimError> {
    if schedule.disable_cycle.is_some_and(|d| d <= schedule.enable_cycle) || schedule.enable_cycle < schedule.load_cycle {
        return Err(SimError::Schedule);
    }
    let (inputs, outputs) = top_ports(baseline);
    let required: Vec<&str> = inputs.iter().map(String::as_str).collect();
    let (golden, faulty) = thread::scope(|s| {
        let golden = s.spawn(|| run_golden(baseline, stim));
        let faulty = run_faulty(instrumented, configs, stim, schedule, mode, &outputs, &required);
        (golden.join().expect("golden run panicked"), faulty)
    });
    let golden = golden?;
    let (faulty, log) = faulty?;
    let report = diff_runs(&golden, &faulty).expect("same outputs and length");
    Ok(CampaignResult { log, report, golden, faulty })
}
