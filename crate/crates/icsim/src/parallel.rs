// Copyright icsim Contributors
// SPDX-License-Identifier: Apache-2.0

//! Verification sweep spread over threads.

use icsim_core::regionizer::Regionized;
use icsim_core::verify::{Outcome, Verifier, VerifyConfig, VerifyReport};
use icsim_core::SimError;
use rayon::prelude::*;

/// Same report as the sequential sweep: outcomes are merged in cut order
/// and mismatches sorted by injection point.
pub fn verify_parallel(r: &Regionized, program: &str, cfg: VerifyConfig) -> Result<VerifyReport, SimError> {
    let v = Verifier::new(r, cfg)?;
    let outcomes: Vec<Outcome> = (0..v.cuts.len()).into_par_iter().map(|i| v.check(i)).collect();
    Ok(v.report(program, outcomes))
}
