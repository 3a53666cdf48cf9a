// Copyright icsim Contributors
// SPDX-License-Identifier: Apache-2.0

use crate::error::SimError;

/// Latencies. Everything the core or the release engine does takes a
/// whole number of clock cycles.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default))]
pub struct TimingModel {
    pub clock_ns: u64,
    pub alu_cycles: u64,
    pub nvm_read_ns: u64,
    pub nvm_write_ns: u64,
    pub sb_commit_cycles: u64,
    /// Speed-up of the phase-2 copy engine; `None` copies with the CPU.
    pub dma_factor: Option<u64>,
}

impl Default for TimingModel {
    fn default() -> Self {
        TimingModel {
            clock_ns: 40,
            alu_cycles: 1,
            nvm_read_ns: 20,
            nvm_write_ns: 120,
            sb_commit_cycles: 1,
            dma_factor: None,
        }
    }
}

impl TimingModel {
    pub fn validate(&self) -> Result<(), SimError> {
        let bad = |what: &str| Err(SimError::Config(alloc::format!("{what} must be positive")));
        if self.clock_ns == 0 {
            return bad("clock period");
        }
        if self.alu_cycles == 0 || self.sb_commit_cycles == 0 {
            return bad("cycle counts");
        }
        if self.nvm_read_ns == 0 || self.nvm_write_ns == 0 {
            return bad("NVM latencies");
        }
        if self.dma_factor == Some(0) {
            return bad("dma factor");
        }
        Ok(())
    }

    fn cycles(&self, ns: u64) -> u64 {
        ns.div_ceil(self.clock_ns)
    }

    pub fn read_cycles(&self) -> u64 {
        self.cycles(self.nvm_read_ns)
    }

    pub fn write_cycles(&self) -> u64 {
        self.cycles(self.nvm_write_ns)
    }

    /// One proxy-to-home copy: a read plus a write, sped up by DMA.
    pub fn copy_cycles(&self) -> u64 {
        let cpu = self.read_cycles() + self.write_cycles();
        match self.dma_factor {
            Some(f) => cpu.div_ceil(f),
            None => cpu,
        }
    }

    pub fn ns(&self, cycles: u64) -> u64 {
        cycles * self.clock_ns
    }
}
