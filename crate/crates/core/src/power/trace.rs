// Copyright icsim Contributors
// SPDX-License-Identifier: Apache-2.0

use alloc::vec::Vec;

use crate::error::SimError;

/// Piecewise-linear voltage trace. Past its last sample the trace repeats
/// from the first one, so short recordings can drive long runs.
#[derive(Clone, Debug, PartialEq)]
pub struct PowerTrace {
    times_ns: Vec<u64>,
    volts: Vec<f64>,
}

/// Threshold test used when searching the trace.
#[derive(Clone, Copy, Debug)]
pub enum Level {
    AtLeast(f64),
    Below(f64),
}

impl Level {
    fn holds(self, v: f64) -> bool {
        match self {
            Level::AtLeast(x) => v >= x,
            Level::Below(x) => v < x,
        }
    }

    fn threshold(self) -> f64 {
        match self {
            Level::AtLeast(x) | Level::Below(x) => x,
        }
    }
}

impl PowerTrace {
    /// Samples are `(time in µs, volts)`.
    pub fn from_samples(samples: &[(f64, f64)]) -> Result<PowerTrace, SimError> {
        if samples.is_empty() {
            return Err(SimError::Trace("trace is empty".into()));
        }
        let mut times_ns = Vec::with_capacity(samples.len());
        let mut volts = Vec::with_capacity(samples.len());
        for (i, &(t, v)) in samples.iter().enumerate() {
            if !t.is_finite() || t < 0.0 {
                return Err(SimError::Trace(alloc::format!("sample {i}: invalid time {t}")));
            }
            if !v.is_finite() || v < 0.0 {
                return Err(SimError::Trace(alloc::format!("sample {i}: invalid voltage {v}")));
            }
            let ns = libm_round(t * 1000.0);
            if times_ns.last().is_some_and(|&p| ns <= p) {
                return Err(SimError::Trace(alloc::format!("sample {i}: time {t} µs is not increasing")));
            }
            times_ns.push(ns);
            volts.push(v);
        }
        Ok(PowerTrace { times_ns, volts })
    }

    pub fn constant(volts: f64) -> PowerTrace {
        PowerTrace { times_ns: alloc::vec![0], volts: alloc::vec![volts] }
    }

    pub fn len(&self) -> usize {
        self.times_ns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times_ns.is_empty()
    }

    /// Samples as `(µs, volts)`.
    pub fn samples(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.times_ns.iter().zip(&self.volts).map(|(&t, &v)| (t as f64 / 1000.0, v))
    }

    pub fn period_ns(&self) -> u64 {
        self.times_ns[self.len() - 1] - self.times_ns[0]
    }

    pub fn duration_ns(&self) -> u64 {
        self.times_ns[self.len() - 1]
    }

    /// Voltage at `t`, repeating periodically.
    pub fn at(&self, t: u64) -> f64 {
        let t0 = self.times_ns[0];
        if self.len() == 1 || t <= t0 {
            return self.volts[0];
        }
        let off = t0 + (t - t0) % self.period_ns();
        let i = self.times_ns.partition_point(|&s| s <= off) - 1;
        self.interp(i, off)
    }

    fn interp(&self, i: usize, t: u64) -> f64 {
        if i + 1 >= self.len() {
            return self.volts[i];
        }
        let (a, b) = (self.times_ns[i], self.times_ns[i + 1]);
        let (va, vb) = (self.volts[i], self.volts[i + 1]);
        va + (vb - va) * (t - a) as f64 / (b - a) as f64
    }

    /// First time `>= from` at which `level` holds, or `None` if it never
    /// does within one full period.
    pub fn find(&self, from: u64, level: Level) -> Option<u64> {
        let t0 = self.times_ns[0];
        if self.len() == 1 || from < t0 {
            if level.holds(self.volts[0]) {
                return Some(from);
            }
            if self.len() == 1 {
                return None;
            }
        }
        let from = from.max(t0);
        let period = self.period_ns();
        let mut base = (from - t0) / period * period;
        let mut seg = self.times_ns.partition_point(|&s| s <= t0 + (from - t0) % period) - 1;
        let last = self.len() - 2;
        seg = seg.min(last);
        for _ in 0..2 * self.len() {
            let a = base + self.times_ns[seg];
            let b = base + self.times_ns[seg + 1];
            let start = a.max(from);
            if start <= b {
                let vs = self.interp(seg, start - base);
                if level.holds(vs) {
                    return Some(start);
                }
                let vb = self.volts[seg + 1];
                if level.holds(vb) {
                    return Some(self.crossing(seg, base, start, b, vs, level));
                }
            }
            if seg == last {
                seg = 0;
                base += period;
            } else {
                seg += 1;
            }
        }
        None
    }

    /// Earliest integer time in `(start, b]` where `level` holds on the
    /// linear segment.
    fn crossing(&self, seg: usize, base: u64, start: u64, b: u64, vs: f64, level: Level) -> u64 {
        let vb = self.volts[seg + 1];
        let x = level.threshold();
        let frac = (x - vs) / (vb - vs);
        let mut t = start + libm_ceil(frac * (b - start) as f64).clamp(0, b - start);
        while t > start + 1 && level.holds(self.interp(seg, t - 1 - base)) {
            t -= 1;
        }
        while t < b && !level.holds(self.interp(seg, t - base)) {
            t += 1;
        }
        t.max(start + 1).min(b)
    }

    /// Downward crossings of `threshold` over one pass of the trace.
    pub fn dips_below(&self, threshold: f64) -> usize {
        self.volts.windows(2).filter(|w| w[0] >= threshold && w[1] < threshold).count()
    }

    /// Time spent at or above `threshold` over one pass, in ns.
    pub fn time_at_or_above(&self, threshold: f64) -> u64 {
        let mut total = 0.0;
        for i in 0..self.len().saturating_sub(1) {
            let (a, b) = (self.times_ns[i] as f64, self.times_ns[i + 1] as f64);
            let (va, vb) = (self.volts[i], self.volts[i + 1]);
            let frac = match (va >= threshold, vb >= threshold) {
                (true, true) => 1.0,
                (false, false) => 0.0,
                (true, false) => (va - threshold) / (va - vb),
                (false, true) => (vb - threshold) / (vb - va),
            };
            total += frac * (b - a);
        }
        total as u64
    }
}

// `f64::round` and `f64::ceil` need std; inputs here are non-negative.
fn libm_round(x: f64) -> u64 {
    (x + 0.5) as u64
}

fn libm_ceil(x: f64) -> u64 {
    if x <= 0.0 {
        return 0;
    }
    let t = x as u64;
    if (t as f64) < x {
        t + 1
    } else {
        t
    }
}
