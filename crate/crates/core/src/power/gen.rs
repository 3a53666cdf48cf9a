// Copyright icsim Contributors
// SPDX-License-Identifier: Apache-2.0

//! Synthetic harvested-voltage traces.
//!
//! Between outages the voltage wanders around `mean_on_v` (never below
//! 2.0 V), sagging through the baseline's 3.1/3.3 V thresholds but not
//! through 1.8 V. Each outage is a ramp down to well under 1.8 V, an off
//! period and a ramp back up. Outages are spread over the trace with
//! jittered spacing, one per gap, so the count is exact.

use alloc::vec::Vec;

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

use super::trace::PowerTrace;
use crate::error::SimError;

/// Lowest voltage of the powered phase.
pub const ON_FLOOR_V: f64 = 2.0;
const STEP_US: f64 = 100.0;
const RAMP_US: f64 = 100.0;

#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TraceSpec {
    pub outages: u32,
    pub mean_on_v: f64,
    pub duration_s: f64,
    pub seed: u64,
}

impl TraceSpec {
    pub fn new(outages_per_30s: u32, mean_on_v: f64, seed: u64) -> TraceSpec {
        TraceSpec { outages: outages_per_30s, mean_on_v, duration_s: 30.0, seed }
    }
}

fn unit(rng: &mut ChaCha8Rng) -> f64 {
    (rng.next_u64() >> 11) as f64 / (1u64 << 53) as f64
}

fn uniform(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    lo + (hi - lo) * unit(rng)
}

pub fn gen_trace(spec: &TraceSpec) -> Result<PowerTrace, SimError> {
    if spec.outages == 0 || spec.duration_s.is_nan() || spec.duration_s <= 0.0 {
        return Err(SimError::Trace("outage count and duration must be positive".into()));
    }
    if spec.mean_on_v.is_nan() || spec.mean_on_v < ON_FLOOR_V + 0.1 || spec.mean_on_v > 20.0 {
        return Err(SimError::Trace(alloc::format!("mean on-voltage must be in [{}, 20] V", ON_FLOOR_V + 0.1)));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let total_us = spec.duration_s * 1e6;
    let n = spec.outages as usize;
    let weights: Vec<f64> = (0..n).map(|_| uniform(&mut rng, 0.5, 1.5)).collect();
    let sum: f64 = weights.iter().sum();
    let high = spec.mean_on_v + 0.8;

    let mut samples: Vec<(f64, f64)> = Vec::new();
    samples.push((0.0, 0.0));
    let mut t = RAMP_US;
    let mut v = uniform(&mut rng, ON_FLOOR_V + 0.2, spec.mean_on_v);
    samples.push((t, v));
    for w in weights {
        let gap = w / sum * (total_us - 2.0 * RAMP_US);
        // Off for 5-30 % of the gap, including the two ramps.
        let off = (gap * uniform(&mut rng, 0.05, 0.3)).max(2.0 * RAMP_US + STEP_US);
        let on_until = t + gap - off;
        while t + STEP_US < on_until {
            t += STEP_US;
            let pull = 0.02 * (spec.mean_on_v - v);
            v = (v + pull + uniform(&mut rng, -0.06, 0.06)).clamp(ON_FLOOR_V, high);
            samples.push((t, v));
        }
        let bottom = uniform(&mut rng, 0.2, 1.5);
        t = on_until.max(t + 1.0);
        samples.push((t + RAMP_US, bottom));
        let up_at = t + off - RAMP_US;
        samples.push((up_at, bottom));
        t = up_at + RAMP_US;
        v = uniform(&mut rng, ON_FLOOR_V + 0.2, spec.mean_on_v);
        samples.push((t, v));
    }
    if t < total_us {
        samples.push((total_us, v));
    }
    PowerTrace::from_samples(&samples)
}
