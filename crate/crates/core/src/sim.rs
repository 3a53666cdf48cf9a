// Copyright icsim Contributors
// SPDX-License-Identifier: Apache-2.0

//! Whole runs: a regionized program on the machine, powered by a trace.

use alloc::vec::Vec;

use crate::error::SimError;
use crate::ir::{Executable, Program};
use crate::persistence::NvmImage;
use crate::machine::{EnergyMeter, Event, EventKind, Machine, MachineConfig, Stats};
use crate::power::{next_on, PowerTrace, SupplyConfig};
use crate::regionizer::{BypassStats, Regionized};

#[derive(Clone, Debug, PartialEq)]
pub struct SimConfig {
    pub machine: MachineConfig,
    pub supply: SupplyConfig,
    /// Cap on executed instructions, re-executions included.
    pub budget: u64,
    /// Give up after this many consecutive outages without new committed
    /// work.
    pub stagnation_outages: u64,
    /// Give up once simulated time passes this.
    pub max_time_ns: Option<u64>,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            machine: MachineConfig::default(),
            supply: SupplyConfig::speculative(),
            budget: 500_000_000,
            stagnation_outages: 100,
            max_time_ns: None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "kebab-case"))]
pub enum Completion {
    Completed,
    /// Outages kept destroying all progress.
    Stagnated,
    /// The supply never came up (again).
    NoPower,
    TimeLimit,
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct BypassReport {
    pub static_loads: usize,
    pub static_bypassed: usize,
    pub static_rate: f64,
    pub dynamic_loads: u64,
    pub dynamic_bypassed: u64,
    pub dynamic_rate: f64,
}

impl BypassReport {
    pub fn new(s: BypassStats, stats: &Stats) -> BypassReport {
        let dynamic_rate =
            if stats.loads == 0 { 0.0 } else { stats.bypassed_loads as f64 / stats.loads as f64 };
        BypassReport {
            static_loads: s.loads,
            static_bypassed: s.bypassed,
            static_rate: s.rate(),
            dynamic_loads: stats.loads,
            dynamic_bypassed: stats.bypassed_loads,
            dynamic_rate,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct SimResult {
    pub status: Completion,
    pub completion_ns: u64,
    pub completion_us: f64,
    pub on_ns: u64,
    pub off_ns: u64,
    pub instructions: u64,
    pub reexecuted: u64,
    pub outages: u64,
    pub ilp_efficiency: f64,
    pub stall_cycles: u64,
    pub releases: u64,
    pub watchdog_checkpoints: u64,
    pub max_half_occupancy: usize,
    pub energy: EnergyMeter,
    pub bypass: BypassReport,
    /// Final data segment.
    pub memory: Vec<u32>,
    /// Final contents of `out`.
    pub output: Vec<u32>,
    #[cfg_attr(feature = "serde", serde(skip))]
    pub events: Vec<Event>,
    /// `(dynamic index, value)` of every load, if recorded.
    #[cfg_attr(feature = "serde", serde(skip))]
    pub loads: Vec<(u64, u32)>,
    /// Final NVM image; the baseline has none.
    #[cfg_attr(feature = "serde", serde(skip))]
    pub nvm: Option<NvmImage>,
}

impl SimResult {
    pub fn on_fraction(&self) -> f64 {
        if self.completion_ns == 0 {
            0.0
        } else {
            self.on_ns as f64 / self.completion_ns as f64
        }
    }
}

pub(crate) fn output_of(p: &Program, exe: &Executable, memory: &[u32]) -> Vec<u32> {
    p.output_symbol().map(|s| memory[exe.map.word_range(s)].to_vec()).unwrap_or_default()
}

/// Runs `r` until it halts, stagnates or the supply dies for good.
pub fn simulate(r: &Regionized, trace: &PowerTrace, cfg: &SimConfig) -> Result<SimResult, SimError> {
    cfg.supply.validate()?;
    let exe = Executable::link(&r.program);
    let mut m = Machine::new(&exe, cfg.machine.clone())?;
    let mut t = 0u64;
    let mut on_ns = 0u64;
    let mut outages = 0u64;
    let mut idle_outages = 0u64;
    let mut last_commit = 0u64;
    let status = 'run: loop {
        let Some(w) = next_on(trace, &cfg.supply, t) else { break Completion::NoPower };
        for &(start, end, aborted) in &w.wakes {
            m.note(start, EventKind::WakeStart);
            m.charge_transition(end - start);
            if aborted {
                m.note(end, EventKind::WakeAbort);
            }
        }
        if cfg.max_time_ns.is_some_and(|limit| w.on > limit) {
            t = w.on;
            break Completion::TimeLimit;
        }
        m.power_on(w.on);
        let off = w.off.unwrap_or(u64::MAX);
        while let Some(next) = m.next_time() {
            if next > off {
                break;
            }
            if cfg.max_time_ns.is_some_and(|limit| next > limit) {
                on_ns += m.now() - w.on;
                t = m.now();
                break 'run Completion::TimeLimit;
            }
            m.step()?;
            if m.is_done() {
                on_ns += m.now() - w.on;
                t = m.now();
                break 'run Completion::Completed;
            }
            if m.stats().instructions > cfg.budget {
                return Err(SimError::BudgetExceeded { budget: cfg.budget });
            }
        }
        if w.off.is_none() {
            return Err(SimError::Config("machine stalled with power on".into()));
        }
        on_ns += off - w.on;
        m.power_cut(off);
        outages += 1;
        m.charge_transition(cfg.supply.sleep_ns);
        t = off + cfg.supply.sleep_ns;
        let committed = m.nvm().committed_index;
        if committed > last_commit {
            last_commit = committed;
            idle_outages = 0;
        } else {
            idle_outages += 1;
            if idle_outages >= cfg.stagnation_outages {
                break Completion::Stagnated;
            }
        }
    };
    if status != Completion::Completed {
        m.abandon();
        m.note(t, EventKind::Done);
    }
    debug_assert_eq!(m.meter().total(), m.consumed_fj());
    let memory = m.primary().to_vec();
    let stats = *m.stats();
    Ok(SimResult {
        status,
        completion_ns: t,
        completion_us: t as f64 / 1000.0,
        on_ns,
        off_ns: t - on_ns,
        instructions: stats.instructions,
        reexecuted: stats.reexecuted,
        outages,
        ilp_efficiency: stats.ilp_efficiency(),
        stall_cycles: stats.stall_cycles,
        releases: stats.releases,
        watchdog_checkpoints: stats.watchdog_checkpoints,
        max_half_occupancy: stats.max_half_occupancy,
        energy: *m.meter(),
        bypass: BypassReport::new(r.bypass, &stats),
        output: output_of(&r.program, &exe, &memory),
        memory,
        events: m.take_events(),
        loads: m.take_loads(),
        nvm: Some(m.nvm().clone()),
    })
}
