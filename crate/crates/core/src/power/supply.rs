// Copyright icsim Contributors
// SPDX-License-Identifier: Apache-2.0

use alloc::vec::Vec;

use super::trace::{Level, PowerTrace};
use crate::error::SimError;

/// Supply thresholds and transition times.
///
/// The core powers up once the voltage reaches `wake_v` and stays at or
/// above `abort_v` for the whole wake-up time. It loses power when the
/// voltage drops below `fail_v`, then sleeps for `sleep_ns` before it can
/// wake again.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SupplyConfig {
    pub wake_v: f64,
    pub abort_v: f64,
    pub fail_v: f64,
    pub sleep_ns: u64,
    pub wakeup_ns: u64,
}

impl Default for SupplyConfig {
    fn default() -> Self {
        SupplyConfig::speculative()
    }
}

impl SupplyConfig {
    /// Thresholds of the store-buffer design: 1.8 V on and off.
    pub fn speculative() -> SupplyConfig {
        SupplyConfig { wake_v: 1.8, abort_v: 1.8, fail_v: 1.8, sleep_ns: 212_000, wakeup_ns: 310_000 }
    }

    /// Nonvolatile-processor baseline: wakes at 3.3 V, checkpoints when
    /// falling to 3.1 V, and needs 2.9 V to finish restoring.
    pub fn nvp() -> SupplyConfig {
        SupplyConfig { wake_v: 3.3, abort_v: 2.9, fail_v: 3.1, sleep_ns: 46_000, wakeup_ns: 14_000 }
    }

    pub fn validate(&self) -> Result<(), SimError> {
        let ok = [self.wake_v, self.abort_v, self.fail_v].iter().all(|v| v.is_finite() && *v >= 0.0);
        if !ok || self.wake_v < self.fail_v || self.wake_v < self.abort_v {
            return Err(SimError::Config("wake threshold must be at least the off thresholds".into()));
        }
        Ok(())
    }
}

/// One powered interval and the wake-up attempts that led to it.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OnWindow {
    /// `(start, end, aborted)` of every wake-up attempt.
    pub wakes: Vec<(u64, u64, bool)>,
    pub on: u64,
    /// When power is lost; `None` if it never is.
    pub off: Option<u64>,
}

/// Next powered interval starting the search at `from`, or `None` if the
/// supply never comes up.
pub fn next_on(trace: &PowerTrace, cfg: &SupplyConfig, from: u64) -> Option<OnWindow> {
    let mut wakes = Vec::new();
    let mut t = from;
    let horizon = from.saturating_add(2 * trace.period_ns() + cfg.wakeup_ns + 1);
    loop {
        let start = trace.find(t, Level::AtLeast(cfg.wake_v))?;
        if start > horizon && !wakes.is_empty() {
            return None;
        }
        let on = start + cfg.wakeup_ns;
        match trace.find(start, Level::Below(cfg.abort_v)) {
            Some(a) if a < on => {
                wakes.push((start, a, true));
                t = a;
            }
            _ => {
                wakes.push((start, on, false));
                let off = trace.find(on, Level::Below(cfg.fail_v));
                return Some(OnWindow { wakes, on, off });
            }
        }
    }
}

/// Total powered time over `[0, until)`.
pub fn on_time(trace: &PowerTrace, cfg: &SupplyConfig, until: u64) -> u64 {
    let mut total = 0;
    let mut t = 0;
    while t < until {
        let Some(w) = next_on(trace, cfg, t) else { break };
        if w.on >= until {
            break;
        }
        let off = w.off.unwrap_or(u64::MAX).min(until);
        total += off - w.on;
        t = off.saturating_add(cfg.sleep_ns);
    }
    total
}
