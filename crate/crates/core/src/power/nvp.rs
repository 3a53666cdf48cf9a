// Copyright icsim Contributors
// SPDX-License-Identifier: Apache-2.0

//! Nonvolatile-processor baseline.
//!
//! No regions and no store buffer: every store writes NVM directly. When
//! the supply drops to the checkpoint threshold the registers and PC are
//! frozen in place at no cost and execution later continues exactly
//! where it stopped. An instruction still in flight at that moment is
//! simply issued again.

use super::supply::{next_on, SupplyConfig};
use super::trace::PowerTrace;
use crate::error::SimError;
use crate::ir::{Executable, Insn, MemAddr, Program, Src, LINK_REG, NUM_REGS};
use crate::machine::{Category, EnergyMeter, EnergyModel, TimingModel};
use crate::sim::{output_of, BypassReport, Completion, SimResult};

#[derive(Clone, Debug, PartialEq)]
pub struct NvpConfig {
    pub timing: TimingModel,
    pub energy: EnergyModel,
    pub supply: SupplyConfig,
    pub budget: u64,
}

impl Default for NvpConfig {
    fn default() -> Self {
        NvpConfig {
            timing: TimingModel::default(),
            energy: EnergyModel::default(),
            supply: SupplyConfig::nvp(),
            budget: 500_000_000,
        }
    }
}

pub fn simulate_nvp(p: &Program, trace: &PowerTrace, cfg: &NvpConfig) -> Result<SimResult, SimError> {
    cfg.timing.validate()?;
    cfg.supply.validate()?;
    let exe = Executable::link(p);
    let timing = cfg.timing;
    let e = cfg.energy;
    let mut mem = exe.data.clone();
    let mut regs = [0u32; NUM_REGS];
    let mut pc = exe.entry_pc;
    let mut meter = EnergyMeter::default();
    let mut instructions = 0u64;
    let mut loads = 0u64;
    let (mut t, mut on_ns, mut outages) = (0u64, 0u64, 0u64);
    let src = |regs: &[u32; NUM_REGS], s: Src| match s {
        Src::Reg(r) => regs[r.index()],
        Src::Imm(v) => v,
    };
    let status = 'run: loop {
        let Some(w) = next_on(trace, &cfg.supply, t) else { break Completion::NoPower };
        for &(start, end, _) in &w.wakes {
            meter.add(Category::SleepWakeup, e.transition_fj(end - start));
        }
        let off = w.off.unwrap_or(u64::MAX);
        let mut now = w.on;
        loop {
            let insn = *exe.code.get(pc as usize).ok_or(SimError::InvalidAddress { pc, addr: pc })?;
            let cycles = match insn {
                Insn::Load { .. } => timing.read_cycles(),
                Insn::Store { .. } => timing.write_cycles(),
                _ => timing.alu_cycles,
            };
            let done_at = now + timing.ns(cycles);
            if done_at > off {
                break;
            }
            now = done_at;
            instructions += 1;
            if instructions > cfg.budget {
                return Err(SimError::BudgetExceeded { budget: cfg.budget });
            }
            let mut fj = cycles * e.cycle_fj();
            let word = |regs: &[u32; NUM_REGS], a: MemAddr| -> Result<Option<usize>, SimError> {
                let addr = match a {
                    MemAddr::Abs(addr) => addr,
                    MemAddr::RegOff { base, offset } => regs[base.index()].wrapping_add(offset as u32),
                    MemAddr::Slot(_) => return Ok(None),
                };
                exe.map.word_index(addr).map(Some).ok_or(SimError::InvalidAddress { pc, addr })
            };
            let mut next = pc + 1;
            match insn {
                Insn::Alu { op, rd, ra, rb } => regs[rd.index()] = op.eval(regs[ra.index()], src(&regs, rb)),
                Insn::Mov { rd, src: s } => regs[rd.index()] = src(&regs, s),
                Insn::Load { rd, addr, .. } => {
                    let w = word(&regs, addr)?.ok_or(SimError::InvalidAddress { pc, addr: 0 })?;
                    regs[rd.index()] = mem[w];
                    loads += 1;
                    fj += e.nvm_fj(timing.nvm_read_ns);
                }
                Insn::Store { value, addr, .. } => {
                    let v = src(&regs, value);
                    // Checkpoint-slot stores cost a write and are otherwise dropped.
                    if let Some(w) = word(&regs, addr)? {
                        mem[w] = v;
                    }
                    fj += e.nvm_fj(timing.nvm_write_ns);
                }
                Insn::Branch { cond, ra, rb, target } => {
                    if cond.holds(regs[ra.index()], regs[rb.index()]) {
                        next = target;
                    }
                }
                Insn::Jump { target } => next = target,
                Insn::Call { target } => {
                    regs[LINK_REG.index()] = pc + 1;
                    next = target;
                }
                Insn::Ret => next = regs[LINK_REG.index()],
                Insn::Halt => {
                    meter.add(Category::ComputeSuccess, fj);
                    on_ns += now - w.on;
                    t = now;
                    break 'run Completion::Completed;
                }
            }
            meter.add(Category::ComputeSuccess, fj);
            pc = next;
        }
        if w.off.is_none() {
            return Err(SimError::Config("baseline stalled with power on".into()));
        }
        on_ns += off - w.on;
        outages += 1;
        meter.add(Category::SleepWakeup, e.transition_fj(cfg.supply.sleep_ns));
        t = off + cfg.supply.sleep_ns;
    };
    Ok(SimResult {
        status,
        completion_ns: t,
        completion_us: t as f64 / 1000.0,
        on_ns,
        off_ns: t - on_ns,
        instructions,
        reexecuted: 0,
        outages,
        ilp_efficiency: 0.0,
        stall_cycles: 0,
        releases: 0,
        watchdog_checkpoints: 0,
        max_half_occupancy: 0,
        energy: meter,
        bypass: BypassReport { dynamic_loads: loads, ..Default::default() },
        output: output_of(p, &exe, &mem),
        memory: mem,
        events: alloc::vec::Vec::new(),
        loads: alloc::vec::Vec::new(),
        nvm: None,
    })
}
