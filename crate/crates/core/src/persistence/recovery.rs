// Copyright icsim Contributors
// SPDX-License-Identifier: Apache-2.0

use alloc::vec::Vec;

use super::release::copy_entry;
use super::{NvmImage, Protocol};
use crate::ir::NUM_REGS;

/// One step of the power-on routine.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RecoveryOp {
    ReadStatus,
    ReadCount,
    /// Redo the phase-2 copy of proxy entry `i`.
    Redo(usize),
    WriteStatus(u32),
    ReadReg(u8),
    ReadPc,
    Jump,
}

impl RecoveryOp {
    pub fn writes_nvm(self) -> bool {
        matches!(self, RecoveryOp::Redo(_) | RecoveryOp::WriteStatus(_))
    }
}

/// Recovery cursor. The plan is fixed once the status word is read.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Recovery {
    protocol: Protocol,
    skip_redo: bool,
    plan: Vec<RecoveryOp>,
    next: usize,
}

impl Recovery {
    /// `skip_redo` drops the phase-2 redo, a deliberate bug used to check
    /// that verification notices it.
    pub fn new(protocol: Protocol, skip_redo: bool) -> Recovery {
        Recovery { protocol, skip_redo, plan: alloc::vec![RecoveryOp::ReadStatus], next: 0 }
    }

    pub fn peek(&self) -> Option<RecoveryOp> {
        self.plan.get(self.next).copied()
    }

    pub fn is_done(&self) -> bool {
        self.next >= self.plan.len()
    }

    /// Performs the next op. Register and PC reads go to `regs` and `pc`.
    pub fn step(&mut self, nvm: &mut NvmImage, regs: &mut [u32; NUM_REGS], pc: &mut u32) -> Option<RecoveryOp> {
        let op = self.peek()?;
        self.next += 1;
        let layout = nvm.layout;
        match op {
            RecoveryOp::ReadStatus => self.plan_rest(nvm),
            RecoveryOp::ReadCount => {}
            RecoveryOp::Redo(i) => copy_entry(nvm, i),
            RecoveryOp::WriteStatus(s) => nvm.words[layout.status()] = s,
            RecoveryOp::ReadReg(r) => regs[r as usize] = nvm.words[layout.rf_base() + r as usize],
            RecoveryOp::ReadPc => *pc = nvm.words[layout.pc_slot()],
            RecoveryOp::Jump => {}
        }
        Some(op)
    }

    fn plan_rest(&mut self, nvm: &NvmImage) {
        let s = nvm.status();
        let idle = self.protocol.idle();
        if self.protocol.must_redo(s) {
            let n = nvm.words[nvm.layout.proxy_count()] as usize;
            self.plan.push(RecoveryOp::ReadCount);
            if !self.skip_redo {
                self.plan.extend((0..n).map(RecoveryOp::Redo));
            }
            self.plan.push(RecoveryOp::WriteStatus(idle));
        } else if s != idle {
            // Interrupted in phase 1: the proxy is discarded.
            self.plan.push(RecoveryOp::WriteStatus(idle));
        }
        self.plan.extend((0..NUM_REGS as u8).map(RecoveryOp::ReadReg));
        self.plan.push(RecoveryOp::ReadPc);
        self.plan.push(RecoveryOp::Jump);
    }
}
