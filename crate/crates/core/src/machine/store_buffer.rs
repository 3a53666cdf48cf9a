// Copyright icsim Contributors
// SPDX-License-Identifier: Apache-2.0

use alloc::vec::Vec;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SbEntry {
    /// NVM word index.
    pub word: u32,
    pub value: u32,
    pub checkpoint: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "kebab-case"))]
pub enum HalfState {
    Filling,
    Releasing,
    /// Released, but still forwarding to the region running after it.
    DrainedValid,
    Invalid,
}

#[derive(Clone, Debug)]
pub struct Half {
    pub entries: Vec<SbEntry>,
    pub state: HalfState,
}

impl Half {
    fn clear(&mut self) {
        self.entries.clear();
        self.state = HalfState::Invalid;
    }

    fn newest(&self, word: u32) -> Option<u32> {
        self.entries.iter().rev().find(|e| e.word == word).map(|e| e.value)
    }
}

/// Two halves used alternately by consecutive regions.
#[derive(Clone, Debug)]
pub struct StoreBuffer {
    pub halves: [Half; 2],
    pub active: usize,
    pub capacity: usize,
}

impl StoreBuffer {
    pub fn new(sb_size: usize) -> StoreBuffer {
        let half = |state| Half { entries: Vec::with_capacity(sb_size / 2), state };
        StoreBuffer { halves: [half(HalfState::Filling), half(HalfState::Invalid)], active: 0, capacity: sb_size / 2 }
    }

    pub fn clear(&mut self) {
        self.halves[0].clear();
        self.halves[1].clear();
        self.active = 0;
        self.halves[0].state = HalfState::Filling;
    }

    pub fn active(&self) -> &Half {
        &self.halves[self.active]
    }

    pub fn other(&self) -> &Half {
        &self.halves[self.active ^ 1]
    }

    /// Appends to the active half; `false` if it is full.
    pub fn push(&mut self, e: SbEntry) -> bool {
        let cap = self.capacity;
        let h = &mut self.halves[self.active];
        if h.entries.len() >= cap {
            return false;
        }
        h.entries.push(e);
        true
    }

    /// Own half first, then the previous region's half while it is still
    /// being released or has just been.
    pub fn lookup(&self, word: u32) -> Option<u32> {
        self.active().newest(word).or_else(|| {
            let o = self.other();
            matches!(o.state, HalfState::Releasing | HalfState::DrainedValid).then(|| o.newest(word)).flatten()
        })
    }

    pub fn holds(&self, word: u32) -> bool {
        self.lookup(word).is_some()
    }

    /// Hands the active half to the release engine and switches to the
    /// other one, dropping whatever it still held.
    pub fn rotate(&mut self) -> Vec<SbEntry> {
        let released = self.active;
        self.halves[released].state = HalfState::Releasing;
        let entries = self.halves[released].entries.clone();
        self.active ^= 1;
        let h = &mut self.halves[self.active];
        h.clear();
        h.state = HalfState::Filling;
        entries
    }

    pub fn mark_drained(&mut self) {
        let o = &mut self.halves[self.active ^ 1];
        if o.state == HalfState::Releasing {
            o.state = HalfState::DrainedValid;
        }
    }

    /// Empties the idle half for a register checkpoint.
    pub fn reset_idle(&mut self) {
        self.halves[self.active ^ 1].clear();
    }

    /// Writes into the idle half, bypassing the active one.
    pub fn push_idle(&mut self, e: SbEntry) -> bool {
        let cap = self.capacity;
        let h = &mut self.halves[self.active ^ 1];
        if h.entries.len() >= cap {
            return false;
        }
        h.state = HalfState::Filling;
        h.entries.push(e);
        true
    }

    /// Both halves in commit order, for a full release.
    pub fn take_all(&mut self) -> Vec<SbEntry> {
        let mut all = self.halves[self.active].entries.clone();
        all.extend_from_slice(&self.halves[self.active ^ 1].entries);
        self.halves[0].state = HalfState::Releasing;
        self.halves[1].state = HalfState::Releasing;
        all
    }

    /// After a full release nothing needs forwarding any more.
    pub fn drained_all(&mut self) {
        self.halves[self.active ^ 1].clear();
        self.halves[self.active].entries.clear();
        self.halves[self.active].state = HalfState::Filling;
    }
}
