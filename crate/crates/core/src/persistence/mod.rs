// Copyright icsim Contributors
// SPDX-License-Identifier: Apache-2.0

//! NVM image, failure-atomic store-buffer release and recovery.
//!
//! NVM is a flat array of 32-bit words:
//!
//! ```text
//! [ data segment | proxy count | proxy entries (addr, value) x sb_size
//!   | r0..r15 slots | PC slot | status word ]
//! ```
//!
//! Every write of one word (or one proxy entry) is atomic. Releasing the
//! store buffer copies its entries to the proxy (phase 1) and then from the
//! proxy to their home addresses (phase 2). The status word records which
//! phase was in progress, so recovery either drops a partial proxy or
//! redoes phase 2 from it.

mod recovery;
mod release;

use alloc::vec::Vec;

pub use recovery::{Recovery, RecoveryOp};
pub use release::{release_ops, ReleaseOp};

use crate::ir::{Executable, Reg, Slot, NUM_REGS};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "kebab-case"))]
pub enum Protocol {
    /// Separate drain and complete bits held in one status word.
    #[default]
    TwoBit,
    /// A single bit set once the proxy is complete.
    OneBit,
}

/// Status word values. Bit 0 is `isDrain`, bit 1 is `isComplete`; both
/// are set when no release is in progress.
pub mod status {
    pub const IDLE: u32 = 0b11;
    pub const DRAINING: u32 = 0b00;
    pub const COPYING: u32 = 0b01;
    /// One-bit protocol: proxy not (yet) complete.
    pub const BIT_CLEAR: u32 = 0;
    /// One-bit protocol: proxy complete, phase 2 pending.
    pub const BIT_SET: u32 = 1;
}

impl Protocol {
    pub fn idle(self) -> u32 {
        match self {
            Protocol::TwoBit => status::IDLE,
            Protocol::OneBit => status::BIT_CLEAR,
        }
    }

    /// True if a status value means the proxy holds a complete release
    /// that phase 2 has not finished applying.
    pub fn must_redo(self, status_word: u32) -> bool {
        match self {
            Protocol::TwoBit => status_word == status::COPYING,
            Protocol::OneBit => status_word == status::BIT_SET,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Protocol::TwoBit => "two-bit",
            Protocol::OneBit => "one-bit",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct NvmLayout {
    pub primary_words: usize,
    pub sb_size: usize,
}

impl NvmLayout {
    pub fn new(primary_words: usize, sb_size: usize) -> NvmLayout {
        NvmLayout { primary_words, sb_size }
    }

    pub fn proxy_count(&self) -> usize {
        self.primary_words
    }

    /// Word index of proxy entry `i`'s address; the value follows it.
    pub fn proxy_entry(&self, i: usize) -> usize {
        self.primary_words + 1 + 2 * i
    }

    pub fn rf_base(&self) -> usize {
        self.primary_words + 1 + 2 * self.sb_size
    }

    pub fn slot(&self, s: Slot) -> usize {
        match s {
            Slot::Reg(r) => self.rf_base() + r.index(),
            Slot::Pc => self.rf_base() + NUM_REGS,
        }
    }

    pub fn reg_slot(&self, r: Reg) -> usize {
        self.slot(Slot::Reg(r))
    }

    pub fn pc_slot(&self) -> usize {
        self.slot(Slot::Pc)
    }

    pub fn status(&self) -> usize {
        self.rf_base() + NUM_REGS + 1
    }

    pub fn words(&self) -> usize {
        self.status() + 1
    }
}

/// Persistent state: NVM contents plus the simulator's count of committed
/// dynamic instructions, which rides along with each commit.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct NvmImage {
    pub layout: NvmLayout,
    pub words: Vec<u32>,
    /// Dynamic instruction index execution resumes from after recovery.
    pub committed_index: u64,
}

const SNAPSHOT_MAGIC: &[u8; 8] = b"ICSIMNVM";

impl NvmImage {
    /// Power-on image: data segment loaded, all checkpoint slots zero
    /// except the PC slot, which holds the program entry.
    pub fn fresh(exe: &Executable, sb_size: usize, protocol: Protocol) -> NvmImage {
        let layout = NvmLayout::new(exe.data.len(), sb_size);
        let mut words = alloc::vec![0u32; layout.words()];
        words[..exe.data.len()].copy_from_slice(&exe.data);
        words[layout.pc_slot()] = exe.entry_pc;
        words[layout.status()] = protocol.idle();
        NvmImage { layout, words, committed_index: 0 }
    }

    pub fn primary(&self) -> &[u32] {
        &self.words[..self.layout.primary_words]
    }

    pub fn status(&self) -> u32 {
        self.words[self.layout.status()]
    }

    pub fn proxy(&self, i: usize) -> (u32, u32) {
        let at = self.layout.proxy_entry(i);
        (self.words[at], self.words[at + 1])
    }

    /// PC recovery will resume at, looking through a committed proxy.
    pub fn resume_pc(&self, protocol: Protocol) -> u32 {
        let pc_slot = self.layout.pc_slot() as u32;
        if protocol.must_redo(self.status()) {
            let n = self.words[self.layout.proxy_count()] as usize;
            if let Some(v) = (0..n).rev().map(|i| self.proxy(i)).find(|&(a, _)| a == pc_slot).map(|(_, v)| v) {
                return v;
            }
        }
        self.words[self.layout.pc_slot()]
    }

    /// Flat little-endian encoding: magic, primary word count, store-buffer
    /// size, committed index, then every word.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(32 + 4 * self.words.len());
        out.extend_from_slice(SNAPSHOT_MAGIC);
        out.extend_from_slice(&(self.layout.primary_words as u32).to_le_bytes());
        out.extend_from_slice(&(self.layout.sb_size as u32).to_le_bytes());
        out.extend_from_slice(&self.committed_index.to_le_bytes());
        for w in &self.words {
            out.extend_from_slice(&w.to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Option<NvmImage> {
        let rest = bytes.strip_prefix(SNAPSHOT_MAGIC)?;
        if rest.len() < 16 {
            return None;
        }
        let u32_at = |i: usize| u32::from_le_bytes(rest[i..i + 4].try_into().expect("4 bytes"));
        let layout = NvmLayout::new(u32_at(0) as usize, u32_at(4) as usize);
        let committed_index = u64::from_le_bytes(rest[8..16].try_into().expect("8 bytes"));
        let body = &rest[16..];
        if body.len() != 4 * layout.words() {
            return None;
        }
        let words = body.chunks_exact(4).map(|c| u32::from_le_bytes(c.try_into().expect("4 bytes"))).collect();
        Some(NvmImage { layout, words, committed_index })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ir::parse_program;

    #[test]
    fn layout_is_packed() {
        let l = NvmLayout::new(10, 40);
        assert_eq!(l.proxy_count(), 10);
        assert_eq!(l.proxy_entry(0), 11);
        assert_eq!(l.rf_base(), 91);
        assert_eq!(l.pc_slot(), 107);
        assert_eq!(l.status(), 108);
        assert_eq!(l.words(), 109);
    }

    #[test]
    fn snapshot_round_trip() {
        let p = parse_program("data a = [1, 2, 3]\nfn main { halt }").unwrap();
        let exe = Executable::link(&p);
        let mut img = NvmImage::fresh(&exe, 40, Protocol::TwoBit);
        img.words[5] = 99;
        img.committed_index = 12345;
        let back = NvmImage::from_bytes(&img.to_bytes()).unwrap();
        assert_eq!(back, img);
        assert!(NvmImage::from_bytes(b"nope").is_none());
    }
}
