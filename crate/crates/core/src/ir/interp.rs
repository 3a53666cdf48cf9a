// Copyright icsim Contributors
// SPDX-License-Identifier: Apache-2.0

use alloc::vec::Vec;

use super::link::{Executable, Insn, MemAddr, Src};
use super::{Program, NUM_REGS, WORD_BYTES};
use crate::error::SimError;

/// Final state of a failure-free run.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct GoldenState {
    /// Data segment at `halt`.
    pub memory: Vec<u32>,
    /// Final contents of the `out` symbol (empty if the program has none).
    pub output: Vec<u32>,
    pub instructions: u64,
}

/// Runs `p` on an ideal machine: no power failures, no store buffer,
/// every store lands in memory immediately. Checkpoint stores go to a
/// scratch area and do not affect the result.
pub fn interpret_reference(p: &Program, budget: u64) -> Result<GoldenState, SimError> {
    let exe = Executable::link(p);
    let mut golden = run_linked(&exe, budget, None)?;
    if let Some(out) = p.output_symbol() {
        golden.output = golden.memory[exe.map.word_range(out)].to_vec();
    }
    Ok(golden)
}

/// `(dynamic index, value)` of every load the ideal machine performs.
pub fn reference_loads(p: &Program, budget: u64) -> Result<Vec<(u64, u32)>, SimError> {
    let mut loads = Vec::new();
    run_linked(&Executable::link(p), budget, Some(&mut loads))?;
    Ok(loads)
}

fn run_linked(
    exe: &Executable,
    budget: u64,
    mut loads: Option<&mut Vec<(u64, u32)>>,
) -> Result<GoldenState, SimError> {
    let mut mem = exe.data.clone();
    let mut regs = [0u32; NUM_REGS];
    let mut pc = exe.entry_pc;
    let mut count = 0u64;
    let src = |regs: &[u32; NUM_REGS], s: Src| match s {
        Src::Reg(r) => regs[r.index()],
        Src::Imm(v) => v,
    };
    loop {
        if count >= budget {
            return Err(SimError::BudgetExceeded { budget });
        }
        let insn = *exe.code.get(pc as usize).ok_or(SimError::InvalidAddress { pc, addr: pc })?;
        count += 1;
        let mut next = pc + 1;
        let word = |regs: &[u32; NUM_REGS], a: MemAddr| -> Result<Option<usize>, SimError> {
            let addr = match a {
                MemAddr::Abs(addr) => addr,
                MemAddr::RegOff { base, offset } => regs[base.index()].wrapping_add(offset as u32),
                MemAddr::Slot(_) => return Ok(None),
            };
            exe.map.word_index(addr).map(Some).ok_or(SimError::InvalidAddress { pc, addr })
        };
        match insn {
            Insn::Alu { op, rd, ra, rb } => regs[rd.index()] = op.eval(regs[ra.index()], src(&regs, rb)),
            Insn::Mov { rd, src: s } => regs[rd.index()] = src(&regs, s),
            Insn::Load { rd, addr, .. } => {
                // Slot reads only occur in recovery, never in program code.
                let w = word(&regs, addr)?.ok_or(SimError::InvalidAddress { pc, addr: 0 })?;
                regs[rd.index()] = mem[w];
                if let Some(l) = loads.as_deref_mut() {
                    l.push((count - 1, mem[w]));
                }
            }
            Insn::Store { value, addr, .. } => {
                let v = src(&regs, value);
                if let Some(w) = word(&regs, addr)? {
                    mem[w] = v;
                }
            }
            Insn::Branch { cond, ra, rb, target } => {
                if cond.holds(regs[ra.index()], regs[rb.index()]) {
                    next = target;
                }
            }
            Insn::Jump { target } => next = target,
            Insn::Call { target } => {
                regs[super::LINK_REG.index()] = pc + 1;
                next = target;
            }
            Insn::Ret => next = regs[super::LINK_REG.index()],
            Insn::Halt => break,
        }
        pc = next;
    }
    Ok(GoldenState { memory: mem, output: Vec::new(), instructions: count })
}

/// Byte address of data-segment word `index`.
pub fn word_addr(index: usize) -> u32 {
    super::PRIMARY_BASE + index as u32 * WORD_BYTES
}
