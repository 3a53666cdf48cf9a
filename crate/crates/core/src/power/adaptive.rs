// Copyright icsim Contributors
// SPDX-License-Identifier: Apache-2.0

//! Anti-stagnation controller.
//!
//! A power failure first turns off ILP. When failures keep hitting the
//! same region the watchdog is armed, and every further failure there
//! halves its period. After enough region completions everything returns
//! to normal.

use alloc::vec::Vec;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default))]
pub struct AdaptiveConfig {
    /// React to failures at all.
    pub enabled: bool,
    /// May arm the watchdog (ILP is still turned off when false).
    pub watchdog: bool,
    /// Failures in one region tolerated before arming.
    pub fail_threshold: u32,
    pub initial_period_cycles: u64,
    pub floor_cycles: u64,
    /// Region completions that count as progress.
    pub progress_regions: u32,
    /// Keep the watchdog armed at this period from power-on, with ILP off.
    pub fixed_period: Option<u64>,
}

impl Default for AdaptiveConfig {
    fn default() -> Self {
        AdaptiveConfig {
            enabled: true,
            watchdog: true,
            fail_threshold: 2,
            // 5 ms at 25 MHz
            initial_period_cycles: 125_000,
            floor_cycles: 64,
            progress_regions: 10,
            fixed_period: None,
        }
    }
}

impl AdaptiveConfig {
    /// True if a register checkpoint may ever be taken.
    pub fn may_use_watchdog(&self) -> bool {
        self.fixed_period.is_some() || (self.enabled && self.watchdog)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "mode", rename_all = "kebab-case"))]
pub enum ModeChange {
    IlpOff,
    IlpOn,
    WatchdogArmed { period: u64 },
    WatchdogHalved { period: u64 },
    WatchdogDisarmed,
}

/// Controller state. It survives power failures.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct AdaptiveState {
    base_ilp: bool,
    pub ilp_enabled: bool,
    pub region: Option<u32>,
    pub consecutive: u32,
    /// Armed period in cycles.
    pub watchdog: Option<u64>,
    pub progress: u32,
}

impl AdaptiveState {
    pub fn new(ilp: bool, cfg: &AdaptiveConfig) -> AdaptiveState {
        AdaptiveState {
            base_ilp: ilp,
            ilp_enabled: ilp && cfg.fixed_period.is_none(),
            region: None,
            consecutive: 0,
            watchdog: cfg.fixed_period,
            progress: 0,
        }
    }

    /// `region` is the one execution will resume in.
    pub fn on_failure(&mut self, region: Option<u32>, cfg: &AdaptiveConfig) -> Vec<ModeChange> {
        let mut changes = Vec::new();
        if !cfg.enabled || cfg.fixed_period.is_some() {
            return changes;
        }
        self.progress = 0;
        if self.ilp_enabled {
            self.ilp_enabled = false;
            changes.push(ModeChange::IlpOff);
        }
        if region.is_some() && region == self.region {
            self.consecutive += 1;
        } else {
            self.region = region;
            self.consecutive = 1;
        }
        if cfg.watchdog && self.consecutive > cfg.fail_threshold {
            match self.watchdog {
                None => {
                    self.watchdog = Some(cfg.initial_period_cycles.max(cfg.floor_cycles));
                    changes.push(ModeChange::WatchdogArmed { period: self.watchdog.unwrap_or(0) });
                }
                Some(p) => {
                    let halved = (p / 2).max(cfg.floor_cycles);
                    if halved != p {
                        self.watchdog = Some(halved);
                        changes.push(ModeChange::WatchdogHalved { period: halved });
                    }
                }
            }
        }
        changes
    }

    pub fn on_region_complete(&mut self, cfg: &AdaptiveConfig) -> Vec<ModeChange> {
        let mut changes = Vec::new();
        if !cfg.enabled || cfg.fixed_period.is_some() {
            return changes;
        }
        self.progress = self.progress.saturating_add(1);
        if self.progress < cfg.progress_regions {
            return changes;
        }
        if self.ilp_enabled != self.base_ilp {
            self.ilp_enabled = self.base_ilp;
            changes.push(ModeChange::IlpOn);
        }
        if self.watchdog.take().is_some() {
            changes.push(ModeChange::WatchdogDisarmed);
        }
        self.region = None;
        self.consecutive = 0;
        changes
    }
}
