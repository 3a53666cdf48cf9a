// Copyright icsim Contributors
// SPDX-License-Identifier: Apache-2.0

use crate::power::ModeChange;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "kebab-case"))]
pub enum ReleaseKind {
    /// End of a region: the half it filled.
    Region,
    /// Watchdog checkpoint: both halves.
    Watchdog,
    /// Final drain after `halt`.
    Halt,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "kebab-case"))]
pub enum RecoveryCase {
    /// No release was in progress.
    Restore,
    /// Phase 1 was interrupted; the proxy was dropped.
    Discard,
    /// Phase 2 was redone from the proxy.
    Redo,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "event", rename_all = "kebab-case"))]
pub enum EventKind {
    /// Supply crossed the wake threshold.
    WakeStart,
    /// Voltage fell below the abort threshold before wake-up finished.
    WakeAbort,
    PowerOn,
    PowerOff { committed_index: u64 },
    RecoveryDone { case: RecoveryCase, pc: u32 },
    RegionEnter { half: u8 },
    ReleaseStart { kind: ReleaseKind, entries: u32 },
    Status { value: u32 },
    ReleaseDone {
        kind: ReleaseKind,
        entries: u32,
        duration_cycles: u64,
        phase1_cycles: u64,
        /// Phase-2 copies only; status writes are in `status_cycles`.
        phase2_cycles: u64,
        status_cycles: u64,
    },
    /// Core waited for a release at a region boundary.
    Stall { cycles: u64 },
    Watchdog { period: u64 },
    Mode { change: ModeChange },
    Halt,
    Done,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Event {
    /// Global cycle (wall time divided by the clock period).
    pub cycle: u64,
    pub region: Option<u32>,
    /// Energy consumed since the previous event.
    pub energy_fj: u64,
    #[cfg_attr(feature = "serde", serde(flatten))]
    pub kind: EventKind,
}
