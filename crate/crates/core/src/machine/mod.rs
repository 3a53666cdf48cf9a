// Copyright icsim Contributors
// SPDX-License-Identifier: Apache-2.0

//! In-order, cache-less core with a split store buffer.
//!
//! The machine advances in atomic steps: one retired instruction, one
//! release micro-op, one recovery op or one watchdog register commit.
//! Steps of the core and of the background release engine are
//! interleaved by completion time, so a power cut at time `t` keeps
//! exactly the steps that completed by `t`.
//!
//! Stores go to the active half of the store buffer. At a region boundary
//! that half is released to NVM while the next region fills the other
//! half (ILP). With ILP off the core waits for the release instead.

pub mod energy;
pub mod event;
pub mod store_buffer;
pub mod timing;

use alloc::vec::Vec;

pub use energy::{Category, EnergyMeter, EnergyModel, SearchScheme};
pub use event::{Event, EventKind, RecoveryCase, ReleaseKind};
pub use store_buffer::{HalfState, SbEntry, StoreBuffer};
pub use timing::TimingModel;

use crate::error::SimError;
use crate::ir::{Executable, Insn, MemAddr, Src, LINK_REG, NUM_REGS};
use crate::persistence::{release_ops, NvmImage, Protocol, Recovery, RecoveryOp, ReleaseOp};
use crate::power::{AdaptiveConfig, AdaptiveState};

/// Registers plus PC saved by a watchdog checkpoint.
pub const WATCHDOG_ENTRIES: usize = NUM_REGS + 1;

#[derive(Clone, Debug, PartialEq)]
pub struct MachineConfig {
    pub timing: TimingModel,
    pub energy: EnergyModel,
    pub sb_size: usize,
    pub ilp: bool,
    pub protocol: Protocol,
    /// No store buffer: stores write NVM directly.
    pub naive: bool,
    pub adaptive: AdaptiveConfig,
    /// Debug mutation: recovery skips the phase-2 redo.
    pub skip_phase2_redo: bool,
    pub record_events: bool,
    pub record_loads: bool,
}

impl Default for MachineConfig {
    fn default() -> Self {
        MachineConfig {
            timing: TimingModel::default(),
            energy: EnergyModel::default(),
            sb_size: 40,
            ilp: true,
            protocol: Protocol::TwoBit,
            naive: false,
            adaptive: AdaptiveConfig::default(),
            skip_phase2_redo: false,
            record_events: false,
            record_loads: false,
        }
    }
}

impl MachineConfig {
    pub fn validate(&self) -> Result<(), SimError> {
        self.timing.validate()?;
        if self.sb_size < 2 {
            return Err(SimError::Config(alloc::format!("store buffer of {} entries has no halves", self.sb_size)));
        }
        if !self.naive && self.adaptive.may_use_watchdog() && self.sb_size / 2 < WATCHDOG_ENTRIES {
            return Err(SimError::Config(alloc::format!(
                "store buffer of {} entries cannot hold a {}-entry register checkpoint in one half",
                self.sb_size, WATCHDOG_ENTRIES
            )));
        }
        if self.adaptive.floor_cycles == 0 {
            return Err(SimError::Config("watchdog floor must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Stats {
    pub instructions: u64,
    pub reexecuted: u64,
    pub loads: u64,
    pub bypassed_loads: u64,
    pub forwarded_loads: u64,
    pub releases: u64,
    pub watchdog_checkpoints: u64,
    pub recoveries: u64,
    /// Cycles the core waited at region boundaries.
    pub stall_cycles: u64,
    /// Durations of region releases that ended before a region boundary.
    pub release_cycles: u64,
    /// The part of those durations overlapped with execution.
    pub hidden_cycles: u64,
    pub max_half_occupancy: usize,
}

impl Stats {
    pub fn ilp_efficiency(&self) -> f64 {
        if self.release_cycles == 0 {
            0.0
        } else {
            self.hidden_cycles as f64 / self.release_cycles as f64
        }
    }
}

/// Persistent part of the machine: what a power cut leaves behind.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Persistent {
    pub nvm: NvmImage,
    pub ctrl: AdaptiveState,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Wait {
    /// Region ended while the previous release was in flight.
    Boundary(u64),
    /// ILP off: waiting for this region's own release.
    OwnRelease(u64),
    Watchdog,
    Halt { started: bool },
}

#[derive(Clone, Debug)]
enum Core {
    Off,
    Recovering(Recovery),
    Running,
    /// Committing watchdog entry `n` to the idle half.
    Watchdog(u8),
    Wait(Wait),
    Done,
}

#[derive(Clone, Debug)]
struct Release {
    kind: ReleaseKind,
    ops: Vec<ReleaseOp>,
    next: usize,
    entries: Vec<(u32, u32)>,
    end_index: u64,
    started: u64,
    /// Completion time of the last op.
    free: u64,
    region: Option<u32>,
    compute_fj: u64,
    ilp: bool,
    phase_fj: [u64; 2],
    committed: bool,
    phase1_cycles: u64,
    phase2_cycles: u64,
    status_cycles: u64,
}

#[derive(Clone, Copy, Debug, Default)]
struct Instance {
    region: Option<u32>,
    ilp: bool,
    compute_fj: u64,
}

/// What a step did.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct StepInfo {
    pub time: u64,
    /// The step wrote NVM.
    pub persistent: bool,
}

#[derive(Clone, Debug)]
pub struct Machine<'a> {
    exe: &'a Executable,
    cfg: MachineConfig,
    nvm: NvmImage,
    ctrl: AdaptiveState,
    regs: [u32; NUM_REGS],
    pc: u32,
    sb: StoreBuffer,
    core: Core,
    core_free: u64,
    release: Option<Release>,
    inst: Instance,
    dyn_index: u64,
    high_water: u64,
    watchdog_left: u64,
    booted: bool,
    recovery_case: RecoveryCase,
    now: u64,
    stats: Stats,
    meter: EnergyMeter,
    consumed: u64,
    reported: u64,
    events: Vec<Event>,
    loads: Vec<(u64, u32)>,
}

impl<'a> Machine<'a> {
    /// A powered-off machine with fresh NVM. The first power-on is a cold
    /// start at the program entry.
    pub fn new(exe: &'a Executable, cfg: MachineConfig) -> Result<Machine<'a>, SimError> {
        cfg.validate()?;
        let nvm = NvmImage::fresh(exe, cfg.sb_size, cfg.protocol);
        let ctrl = AdaptiveState::new(cfg.ilp, &cfg.adaptive);
        Ok(Machine::build(exe, cfg, nvm, ctrl, false))
    }

    /// A powered-off machine that will recover from `state` on power-on.
    pub fn resume(exe: &'a Executable, cfg: MachineConfig, state: Persistent) -> Result<Machine<'a>, SimError> {
        cfg.validate()?;
        let mut m = Machine::build(exe, cfg, state.nvm, state.ctrl, true);
        m.dyn_index = m.nvm.committed_index;
        Ok(m)
    }

    fn build(exe: &'a Executable, cfg: MachineConfig, nvm: NvmImage, ctrl: AdaptiveState, booted: bool) -> Machine<'a> {
        Machine {
            exe,
            sb: StoreBuffer::new(cfg.sb_size),
            cfg,
            nvm,
            ctrl,
            regs: [0; NUM_REGS],
            pc: exe.entry_pc,
            core: Core::Off,
            core_free: 0,
            release: None,
            inst: Instance::default(),
            dyn_index: 0,
            high_water: 0,
            watchdog_left: 0,
            booted,
            recovery_case: RecoveryCase::Restore,
            now: 0,
            stats: Stats::default(),
            meter: EnergyMeter::default(),
            consumed: 0,
            reported: 0,
            events: Vec::new(),
            loads: Vec::new(),
        }
    }

    pub fn config(&self) -> &MachineConfig {
        &self.cfg
    }

    pub fn nvm(&self) -> &NvmImage {
        &self.nvm
    }

    pub fn controller(&self) -> &AdaptiveState {
        &self.ctrl
    }

    pub fn persistent(&self) -> Persistent {
        Persistent { nvm: self.nvm.clone(), ctrl: self.ctrl }
    }

    pub fn primary(&self) -> &[u32] {
        self.nvm.primary()
    }

    pub fn stats(&self) -> &Stats {
        &self.stats
    }

    pub fn meter(&self) -> &EnergyMeter {
        &self.meter
    }

    /// Energy spent so far, whether or not it has been attributed yet.
    pub fn consumed_fj(&self) -> u64 {
        self.consumed
    }

    pub fn events(&self) -> &[Event] {
        &self.events
    }

    pub fn take_events(&mut self) -> Vec<Event> {
        core::mem::take(&mut self.events)
    }

    pub fn loads(&self) -> &[(u64, u32)] {
        &self.loads
    }

    pub fn take_loads(&mut self) -> Vec<(u64, u32)> {
        core::mem::take(&mut self.loads)
    }

    pub fn now(&self) -> u64 {
        self.now
    }

    pub fn dyn_index(&self) -> u64 {
        self.dyn_index
    }

    pub fn is_done(&self) -> bool {
        matches!(self.core, Core::Done)
    }

    pub fn is_off(&self) -> bool {
        matches!(self.core, Core::Off)
    }

    pub fn is_recovering(&self) -> bool {
        matches!(self.core, Core::Recovering(_))
    }

    pub fn release_in_flight(&self) -> bool {
        self.release.is_some()
    }

    fn emit(&mut self, time: u64, kind: EventKind) {
        let energy_fj = self.consumed - self.reported;
        self.reported = self.consumed;
        if self.cfg.record_events {
            self.events.push(Event {
                cycle: time / self.cfg.timing.clock_ns,
                region: self.inst.region,
                energy_fj,
                kind,
            });
        }
    }

    /// Records a supply event raised outside the machine.
    pub fn note(&mut self, time: u64, kind: EventKind) {
        self.emit(time, kind);
    }

    /// Sleep and wake-up transitions.
    pub fn charge_transition(&mut self, ns: u64) {
        let fj = self.cfg.energy.transition_fj(ns);
        self.consumed += fj;
        self.meter.add(Category::SleepWakeup, fj);
    }

    fn spend(&mut self, c: Category, fj: u64) {
        self.consumed += fj;
        self.meter.add(c, fj);
    }

    pub fn power_on(&mut self, t: u64) {
        debug_assert!(self.is_off());
        self.now = t;
        self.core_free = t;
        self.emit(t, EventKind::PowerOn);
        if self.booted {
            self.core = Core::Recovering(Recovery::new(self.cfg.protocol, self.cfg.skip_phase2_redo));
        } else {
            self.booted = true;
            self.regs = [0; NUM_REGS];
            self.pc = self.exe.entry_pc;
            self.dyn_index = 0;
            self.begin_instance(t);
            self.core = Core::Running;
        }
    }

    /// Loses all volatile state. Work not yet committed is counted as
    /// mis-speculated.
    pub fn power_cut(&mut self, t: u64) {
        if self.is_done() || self.is_off() {
            return;
        }
        self.now = t;
        self.abandon();
        let resume = self.nvm.resume_pc(self.cfg.protocol);
        let region = self.exe.region_of.get(resume as usize).copied().flatten();
        let changes = self.ctrl.on_failure(region, &self.cfg.adaptive);
        self.emit(t, EventKind::PowerOff { committed_index: self.nvm.committed_index });
        for change in changes {
            self.emit(t, EventKind::Mode { change });
        }
        self.regs = [0; NUM_REGS];
        self.pc = 0;
        self.sb.clear();
        self.core = Core::Off;
        self.inst = Instance::default();
        self.watchdog_left = 0;
    }

    /// Attributes all pending energy as if power were lost now.
    pub fn abandon(&mut self) {
        let fj = core::mem::take(&mut self.inst.compute_fj);
        self.meter.add(Category::ComputeMisspec, fj);
        if let Some(r) = self.release.take() {
            if r.committed {
                self.meter.add(if r.ilp { Category::ComputeSuccess } else { Category::NoIlp }, r.compute_fj);
                self.meter.add(Category::Phase1Success, r.phase_fj[0]);
            } else {
                self.meter.add(Category::ComputeMisspec, r.compute_fj);
                self.meter.add(Category::Phase1Misspec, r.phase_fj[0]);
            }
            self.meter.add(Category::Phase2Misspec, r.phase_fj[1]);
        }
    }

    fn insn_cycles(&self, insn: &Insn) -> u64 {
        let t = &self.cfg.timing;
        match insn {
            Insn::Load { .. } => t.read_cycles(),
            Insn::Store { .. } if self.cfg.naive => t.write_cycles(),
            Insn::Store { .. } => t.sb_commit_cycles,
            _ => t.alu_cycles,
        }
    }

    fn release_op_cycles(&self, op: ReleaseOp) -> u64 {
        match op {
            ReleaseOp::Copy(_) => self.cfg.timing.copy_cycles(),
            _ => self.cfg.timing.write_cycles(),
        }
    }

    fn recovery_op_cycles(&self, op: RecoveryOp) -> u64 {
        let t = &self.cfg.timing;
        match op {
            RecoveryOp::ReadStatus | RecoveryOp::ReadCount | RecoveryOp::ReadReg(_) | RecoveryOp::ReadPc => {
                t.read_cycles()
            }
            RecoveryOp::Redo(_) => t.copy_cycles(),
            RecoveryOp::WriteStatus(_) => t.write_cycles(),
            RecoveryOp::Jump => t.alu_cycles,
        }
    }

    fn core_next(&self) -> Option<u64> {
        let clk = self.cfg.timing.clock_ns;
        let cycles = match &self.core {
            Core::Running => match self.exe.code.get(self.pc as usize) {
                Some(insn) => self.insn_cycles(insn),
                None => self.cfg.timing.alu_cycles,
            },
            Core::Recovering(r) => self.recovery_op_cycles(r.peek()?),
            Core::Watchdog(_) => self.cfg.timing.sb_commit_cycles,
            _ => return None,
        };
        Some(self.core_free + cycles * clk)
    }

    fn release_next(&self) -> Option<u64> {
        let r = self.release.as_ref()?;
        Some(r.free + self.release_op_cycles(r.ops[r.next]) * self.cfg.timing.clock_ns)
    }

    /// Completion time of the next step, if there is one.
    pub fn next_time(&self) -> Option<u64> {
        match (self.core_next(), self.release_next()) {
            (Some(c), Some(r)) => Some(c.min(r)),
            (c, r) => c.or(r),
        }
    }

    /// Performs the next step. On a tie the release engine goes first.
    pub fn step(&mut self) -> Result<StepInfo, SimError> {
        let core = self.core_next();
        let rel = self.release_next();
        let release_first = match (core, rel) {
            (Some(c), Some(r)) => r <= c,
            (c, r) => r.is_some() && c.is_none(),
        };
        let persistent = match (core, rel) {
            (_, Some(r)) if release_first => {
                self.now = r;
                self.release_step(r);
                true
            }
            (Some(c), _) => {
                self.now = c;
                match self.core {
                    Core::Running => self.exec(c)?,
                    Core::Recovering(_) => self.recovery_step(c),
                    Core::Watchdog(n) => {
                        self.watchdog_step(c, n)?;
                        false
                    }
                    _ => unreachable!("core_next is None in other states"),
                }
            }
            _ => return Err(SimError::Config("machine has nothing to do".into())),
        };
        Ok(StepInfo { time: self.now, persistent })
    }

    fn src(&self, s: Src) -> u32 {
        match s {
            Src::Reg(r) => self.regs[r.index()],
            Src::Imm(v) => v,
        }
    }

    /// NVM word index an address refers to.
    fn word(&self, a: MemAddr, pc: u32) -> Result<u32, SimError> {
        let addr = match a {
            MemAddr::Abs(addr) => addr,
            MemAddr::RegOff { base, offset } => self.regs[base.index()].wrapping_add(offset as u32),
            MemAddr::Slot(s) => return Ok(self.nvm.layout.slot(s) as u32),
        };
        self.exe.map.word_index(addr).map(|w| w as u32).ok_or(SimError::InvalidAddress { pc, addr })
    }

    /// Returns the value and whether NVM was read.
    fn load(&mut self, word: u32, bypass: bool, pc: u32) -> Result<(u32, bool), SimError> {
        self.stats.loads += 1;
        if self.cfg.naive {
            return Ok((self.nvm.words[word as usize], true));
        }
        if bypass {
            self.stats.bypassed_loads += 1;
            if self.sb.holds(word) {
                return Err(SimError::BypassViolation { pc, addr: crate::ir::word_addr(word as usize) });
            }
            return Ok((self.nvm.words[word as usize], true));
        }
        self.spend(Category::Search, self.cfg.energy.search_fj());
        match self.sb.lookup(word) {
            Some(v) => {
                self.stats.forwarded_loads += 1;
                Ok((v, false))
            }
            None => Ok((self.nvm.words[word as usize], true)),
        }
    }

    fn exec(&mut self, t: u64) -> Result<bool, SimError> {
        let pc = self.pc;
        let insn = *self.exe.code.get(pc as usize).ok_or(SimError::InvalidAddress { pc, addr: pc })?;
        let index = self.dyn_index;
        let reexec = index < self.high_water;
        self.dyn_index += 1;
        self.high_water = self.high_water.max(self.dyn_index);
        self.stats.instructions += 1;
        if reexec {
            self.stats.reexecuted += 1;
        }
        let cycles = self.insn_cycles(&insn);
        let e = self.cfg.energy;
        let timing = self.cfg.timing;
        let mut work = cycles * e.cycle_fj();
        let mut persistent = false;
        let mut next = pc + 1;
        match insn {
            Insn::Alu { op, rd, ra, rb } => self.regs[rd.index()] = op.eval(self.regs[ra.index()], self.src(rb)),
            Insn::Mov { rd, src } => self.regs[rd.index()] = self.src(src),
            Insn::Load { rd, addr, bypass } => {
                if matches!(addr, MemAddr::Slot(_)) {
                    return Err(SimError::InvalidAddress { pc, addr: 0 });
                }
                let w = self.word(addr, pc)?;
                let (v, from_nvm) = self.load(w, bypass, pc)?;
                if from_nvm {
                    work += e.nvm_fj(timing.nvm_read_ns);
                }
                self.regs[rd.index()] = v;
                if self.cfg.record_loads {
                    self.loads.push((index, v));
                }
            }
            Insn::Store { value, addr, checkpoint } => {
                let word = self.word(addr, pc)?;
                let value = self.src(value);
                if self.cfg.naive {
                    self.nvm.words[word as usize] = value;
                    work += e.nvm_fj(timing.nvm_write_ns);
                    persistent = true;
                    if word as usize == self.nvm.layout.pc_slot() {
                        self.nvm.committed_index = self.dyn_index;
                    }
                } else {
                    if !self.sb.push(SbEntry { word, value, checkpoint }) {
                        return Err(SimError::StoreBufferOverflow { pc, capacity: self.sb.capacity });
                    }
                    self.stats.max_half_occupancy = self.stats.max_half_occupancy.max(self.sb.active().entries.len());
                }
            }
            Insn::Branch { cond, ra, rb, target } => {
                if cond.holds(self.regs[ra.index()], self.regs[rb.index()]) {
                    next = target;
                }
            }
            Insn::Jump { target } => next = target,
            Insn::Call { target } => {
                self.regs[LINK_REG.index()] = pc + 1;
                next = target;
            }
            Insn::Ret => next = self.regs[LINK_REG.index()],
            Insn::Halt => {}
        }
        if reexec {
            self.spend(Category::ReExec, work);
        } else if self.cfg.naive {
            self.spend(Category::ComputeSuccess, work);
        } else {
            self.consumed += work;
            self.inst.compute_fj += work;
        }
        self.pc = next;
        self.core_free = t;
        if self.ctrl.watchdog.is_some() && self.release.is_none() {
            self.watchdog_left = self.watchdog_left.saturating_sub(cycles);
        }

        if matches!(insn, Insn::Halt) {
            self.pc = pc;
            self.emit(t, EventKind::Halt);
            if self.cfg.naive {
                self.core = Core::Done;
                self.emit(t, EventKind::Done);
            } else {
                self.core = Core::Wait(Wait::Halt { started: false });
                self.try_halt(t);
            }
        } else if self.cfg.naive {
        } else if self.exe.region_start.get(next as usize) == Some(&true) {
            if self.release.is_some() {
                self.core = Core::Wait(Wait::Boundary(t));
            } else {
                self.region_release(t);
            }
        } else if let Some(period) = self.ctrl.watchdog {
            if self.watchdog_left == 0 && self.release.is_none() {
                self.sb.reset_idle();
                self.core = Core::Watchdog(0);
                self.emit(t, EventKind::Watchdog { period });
            }
        }
        Ok(persistent)
    }

    fn watchdog_step(&mut self, t: u64, n: u8) -> Result<(), SimError> {
        let layout = self.nvm.layout;
        let (word, value) = if (n as usize) < NUM_REGS {
            (layout.rf_base() + n as usize, self.regs[n as usize])
        } else {
            (layout.pc_slot(), self.pc)
        };
        if !self.sb.push_idle(SbEntry { word: word as u32, value, checkpoint: true }) {
            return Err(SimError::StoreBufferOverflow { pc: self.pc, capacity: self.sb.capacity });
        }
        let fj = self.cfg.timing.sb_commit_cycles * self.cfg.energy.cycle_fj();
        self.consumed += fj;
        self.inst.compute_fj += fj;
        self.core_free = t;
        if (n as usize) + 1 < WATCHDOG_ENTRIES {
            self.core = Core::Watchdog(n + 1);
        } else {
            self.stats.watchdog_checkpoints += 1;
            let entries = self.sb.take_all();
            self.start_release(t, ReleaseKind::Watchdog, entries);
            self.core = Core::Wait(Wait::Watchdog);
        }
        Ok(())
    }

    fn begin_instance(&mut self, t: u64) {
        self.inst = Instance {
            region: self.exe.region_of.get(self.pc as usize).copied().flatten(),
            ilp: self.ctrl.ilp_enabled,
            compute_fj: 0,
        };
        self.watchdog_left = self.ctrl.watchdog.unwrap_or(0);
        self.emit(t, EventKind::RegionEnter { half: self.sb.active as u8 });
    }

    fn start_release(&mut self, t: u64, kind: ReleaseKind, entries: Vec<SbEntry>) {
        let ops = release_ops(self.cfg.protocol, entries.len());
        let n = entries.len() as u32;
        self.stats.releases += 1;
        self.release = Some(Release {
            kind,
            ops,
            next: 0,
            entries: entries.iter().map(|e| (e.word, e.value)).collect(),
            end_index: self.dyn_index,
            started: t,
            free: t,
            region: self.inst.region,
            compute_fj: core::mem::take(&mut self.inst.compute_fj),
            ilp: self.inst.ilp,
            phase_fj: [0; 2],
            committed: false,
            phase1_cycles: 0,
            phase2_cycles: 0,
            status_cycles: 0,
        });
        self.emit(t, EventKind::ReleaseStart { kind, entries: n });
    }

    /// Ends the current region: releases its half and enters the next.
    fn region_release(&mut self, t: u64) {
        let entries = self.sb.rotate();
        self.start_release(t, ReleaseKind::Region, entries);
        self.begin_instance(t);
        self.core = if self.ctrl.ilp_enabled { Core::Running } else { Core::Wait(Wait::OwnRelease(t)) };
    }

    fn try_halt(&mut self, t: u64) {
        if self.release.is_none() {
            let entries = self.sb.rotate();
            self.start_release(t, ReleaseKind::Halt, entries);
            self.core = Core::Wait(Wait::Halt { started: true });
        }
    }

    fn release_step(&mut self, t: u64) {
        let protocol = self.cfg.protocol;
        let e = self.cfg.energy;
        let timing = self.cfg.timing;
        let r = self.release.as_mut().expect("release in flight");
        let op = r.ops[r.next];
        op.apply(&mut self.nvm, protocol, &r.entries, r.end_index);
        let fj = match op {
            ReleaseOp::Copy(_) => e.nvm_fj(timing.nvm_read_ns) + e.nvm_fj(timing.nvm_write_ns),
            _ => e.nvm_fj(timing.nvm_write_ns),
        };
        r.phase_fj[op.phase(protocol) as usize - 1] += fj;
        match op {
            ReleaseOp::Proxy(_) | ReleaseOp::Count => r.phase1_cycles += timing.write_cycles(),
            ReleaseOp::Copy(_) => r.phase2_cycles += timing.copy_cycles(),
            ReleaseOp::Status(_) => r.status_cycles += timing.write_cycles(),
        }
        r.committed |= op.is_commit(protocol);
        r.next += 1;
        r.free = t;
        let finished = r.next == r.ops.len();
        self.consumed += fj;
        if let ReleaseOp::Status(value) = op {
            self.emit(t, EventKind::Status { value });
        }
        if finished {
            self.finish_release(t);
        }
    }

    fn finish_release(&mut self, t: u64) {
        let r = self.release.take().expect("release in flight");
        let clk = self.cfg.timing.clock_ns;
        self.meter.add(Category::Phase1Success, r.phase_fj[0]);
        self.meter.add(Category::Phase2Success, r.phase_fj[1]);
        self.meter.add(if r.ilp { Category::ComputeSuccess } else { Category::NoIlp }, r.compute_fj);
        let duration = (t - r.started) / clk;
        match r.kind {
            ReleaseKind::Region => self.sb.mark_drained(),
            ReleaseKind::Watchdog => self.sb.drained_all(),
            ReleaseKind::Halt => {}
        }
        let mut stall = 0;
        if r.kind == ReleaseKind::Region {
            let waited = match self.core {
                Core::Wait(Wait::Boundary(since) | Wait::OwnRelease(since)) => Some((t - since) / clk),
                Core::Wait(Wait::Halt { .. }) => None,
                _ => Some(0),
            };
            if let Some(w) = waited {
                stall = w;
                self.stats.release_cycles += duration;
                self.stats.hidden_cycles += duration - w;
                self.stats.stall_cycles += w;
            }
        }
        let saved = self.inst.region;
        self.inst.region = r.region;
        self.emit(
            t,
            EventKind::ReleaseDone {
                kind: r.kind,
                entries: r.entries.len() as u32,
                duration_cycles: duration,
                phase1_cycles: r.phase1_cycles,
                phase2_cycles: r.phase2_cycles,
                status_cycles: r.status_cycles,
            },
        );
        self.inst.region = saved;
        if stall > 0 {
            self.emit(t, EventKind::Stall { cycles: stall });
        }
        if r.kind == ReleaseKind::Region {
            for change in self.ctrl.on_region_complete(&self.cfg.adaptive) {
                self.emit(t, EventKind::Mode { change });
            }
        }
        match self.core {
            Core::Wait(Wait::Boundary(_)) => {
                self.core_free = t;
                self.region_release(t);
            }
            Core::Wait(Wait::OwnRelease(_)) => {
                self.core_free = t;
                self.core = Core::Running;
            }
            Core::Wait(Wait::Watchdog) => {
                self.core_free = t;
                self.begin_instance(t);
                self.core = Core::Running;
            }
            Core::Wait(Wait::Halt { started: false }) => {
                self.core_free = t;
                self.try_halt(t);
            }
            Core::Wait(Wait::Halt { started: true }) => {
                self.core = Core::Done;
                self.emit(t, EventKind::Done);
            }
            _ => {}
        }
    }

    fn recovery_step(&mut self, t: u64) -> bool {
        let Core::Recovering(rec) = &mut self.core else { unreachable!() };
        let Some(op) = rec.peek() else { return false };
        if op == RecoveryOp::ReadStatus {
            let s = self.nvm.status();
            self.recovery_case = if self.cfg.protocol.must_redo(s) {
                RecoveryCase::Redo
            } else if s != self.cfg.protocol.idle() {
                RecoveryCase::Discard
            } else {
                RecoveryCase::Restore
            };
        }
        rec.step(&mut self.nvm, &mut self.regs, &mut self.pc);
        let done = rec.is_done();
        let e = self.cfg.energy;
        let timing = self.cfg.timing;
        let fj = match op {
            RecoveryOp::Redo(_) => e.nvm_fj(timing.nvm_read_ns) + e.nvm_fj(timing.nvm_write_ns),
            RecoveryOp::WriteStatus(_) => e.nvm_fj(timing.nvm_write_ns),
            RecoveryOp::Jump => timing.alu_cycles * e.cycle_fj(),
            _ => e.nvm_fj(timing.nvm_read_ns),
        };
        self.spend(Category::SleepWakeup, fj);
        self.core_free = t;
        if let RecoveryOp::WriteStatus(value) = op {
            self.emit(t, EventKind::Status { value });
        }
        if done {
            self.stats.recoveries += 1;
            self.dyn_index = self.nvm.committed_index;
            self.sb.clear();
            self.core = Core::Running;
            self.emit(t, EventKind::RecoveryDone { case: self.recovery_case, pc: self.pc });
            self.begin_instance(t);
        }
        op.writes_nvm()
    }
}
