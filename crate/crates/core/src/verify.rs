// Copyright icsim Contributors
// SPDX-License-Identifier: Apache-2.0

//! Exhaustive power-failure injection.
//!
//! A failure-free run is cut after every step: every retired instruction,
//! release micro-op and watchdog commit. Power failures only lose volatile
//! state, so two cut points with the same persistent state continue
//! identically; the continuation is run once per distinct state. Each
//! continuation recovers, runs to `halt` and its final data segment is
//! compared with the reference interpreter. With the double-failure sweep,
//! the recovery itself is cut after each of its NVM writes too.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::error::SimError;
use crate::ir::{interpret_reference, word_addr, Executable, GoldenState};
use crate::machine::{Machine, MachineConfig, Persistent};
use crate::regionizer::Regionized;

#[derive(Clone, Debug, PartialEq)]
pub struct VerifyConfig {
    pub machine: MachineConfig,
    /// Instruction cap for the reference run; each continuation may use
    /// four times as many steps.
    pub budget: u64,
    pub double_failure: bool,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        VerifyConfig { machine: MachineConfig::default(), budget: 10_000_000, double_failure: true }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "at", rename_all = "kebab-case"))]
pub enum InjectionPoint {
    /// The failure-free run itself.
    NoFailure,
    /// Power cut after `step` steps.
    Step { step: u64 },
    /// A second cut after `recovery_step` steps of the recovery that
    /// followed the first.
    Recovery { step: u64, recovery_step: u64 },
}

#[derive(Clone, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct WordDiff {
    pub addr: u32,
    pub expected: u32,
    pub actual: u32,
}

#[derive(Clone, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Mismatch {
    pub point: InjectionPoint,
    /// Differing words, at most [`MAX_DIFFS`].
    pub diff: Vec<WordDiff>,
    pub differing_words: usize,
    /// Set when the continuation failed instead of finishing.
    pub error: Option<String>,
}

pub const MAX_DIFFS: usize = 16;

#[derive(Clone, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct VerifyReport {
    pub program: String,
    pub injection_points: u64,
    pub distinct_states: u64,
    pub failures: u64,
    pub first_counterexample: Option<Mismatch>,
    pub bypass_violations: u64,
}

impl VerifyReport {
    pub fn consistent(&self) -> bool {
        self.failures == 0
    }
}

/// Result of checking one cut state.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Outcome {
    /// Recovery steps cut in the double-failure sweep.
    pub recovery_points: u64,
    pub states: u64,
    pub mismatches: Vec<Mismatch>,
}

pub struct Verifier {
    exe: Executable,
    golden: GoldenState,
    cfg: VerifyConfig,
    /// Distinct persistent states after a cut, with the first step that
    /// produces each.
    pub cuts: Vec<(u64, Persistent)>,
    /// Steps of the failure-free run.
    pub steps: u64,
    baseline: Option<Mismatch>,
}

impl Verifier {
    pub fn new(r: &Regionized, cfg: VerifyConfig) -> Result<Verifier, SimError> {
        let golden = interpret_reference(&r.program, cfg.budget)?;
        let exe = Executable::link(&r.program);
        let mut cuts = Vec::new();
        let mut steps = 0u64;
        let baseline;
        {
            let mut m = Machine::new(&exe, cfg.machine.clone())?;
            m.power_on(0);
            cuts.push((0, cut_state(&m)));
            let limit = 4 * cfg.budget + 1000;
            loop {
                if m.is_done() {
                    baseline = compare(InjectionPoint::NoFailure, &golden, m.primary(), None);
                    break;
                }
                if steps > limit {
                    return Err(SimError::BudgetExceeded { budget: cfg.budget });
                }
                match m.step() {
                    Ok(info) => {
                        steps += 1;
                        if info.persistent {
                            cuts.push((steps, cut_state(&m)));
                        }
                    }
                    Err(e) => {
                        baseline = compare(InjectionPoint::NoFailure, &golden, m.primary(), Some(e));
                        break;
                    }
                }
            }
        }
        Ok(Verifier { exe, golden, cfg, cuts, steps, baseline })
    }

    pub fn golden(&self) -> &GoldenState {
        &self.golden
    }

    /// Injection points: every cut of the main run.
    pub fn step_points(&self) -> u64 {
        self.steps + 1
    }

    /// Checks cut state `i` of [`Verifier::cuts`].
    pub fn check(&self, i: usize) -> Outcome {
        let (step, state) = &self.cuts[i];
        let mut out = Outcome { states: 1, ..Outcome::default() };
        let point = InjectionPoint::Step { step: *step };
        let (memory, error) = self.continue_from(state.clone(), self.cfg.double_failure.then_some(&mut out), *step);
        if let Some(m) = compare(point, &self.golden, &memory, error) {
            out.mismatches.push(m);
        }
        out
    }

    /// Final data segment after recovering from `state`.
    pub fn run_from(&self, state: Persistent) -> (Vec<u32>, Option<SimError>) {
        self.continue_from(state, None, 0)
    }

    fn continue_from(&self, state: Persistent, mut sweep: Option<&mut Outcome>, step: u64) -> (Vec<u32>, Option<SimError>) {
        let mut m = match Machine::resume(&self.exe, self.cfg.machine.clone(), state) {
            Ok(m) => m,
            Err(e) => return (Vec::new(), Some(e)),
        };
        m.power_on(0);
        let limit = 4 * self.cfg.budget + 1000;
        let mut n = 0u64;
        let mut recovery_step = 0u64;
        while !m.is_done() {
            if n > limit {
                return (m.primary().to_vec(), Some(SimError::BudgetExceeded { budget: self.cfg.budget }));
            }
            let recovering = m.is_recovering();
            match m.step() {
                Ok(info) => {
                    n += 1;
                    if recovering {
                        recovery_step += 1;
                        if let Some(out) = sweep.as_deref_mut() {
                            out.recovery_points += 1;
                            if info.persistent && m.is_recovering() {
                                let inner = cut_state(&m);
                                out.states += 1;
                                let (memory, error) = self.continue_from(inner, None, step);
                                let point = InjectionPoint::Recovery { step, recovery_step };
                                if let Some(x) = compare(point, &self.golden, &memory, error) {
                                    out.mismatches.push(x);
                                }
                            }
                        }
                    }
                }
                Err(e) => return (m.primary().to_vec(), Some(e)),
            }
        }
        (m.primary().to_vec(), None)
    }

    /// Merges outcomes (in cut order) into a report.
    pub fn report(&self, program: &str, outcomes: impl IntoIterator<Item = Outcome>) -> VerifyReport {
        let mut report = VerifyReport {
            program: program.into(),
            injection_points: self.step_points(),
            distinct_states: 0,
            failures: 0,
            first_counterexample: None,
            bypass_violations: 0,
        };
        let mut all: Vec<Mismatch> = self.baseline.iter().cloned().collect();
        for o in outcomes {
            report.injection_points += o.recovery_points;
            report.distinct_states += o.states;
            all.extend(o.mismatches);
        }
        all.sort_by_key(|m| m.point);
        report.failures = all.len() as u64;
        report.bypass_violations =
            all.iter().filter(|m| m.error.as_deref().is_some_and(|e| e.contains("bypass"))).count() as u64;
        report.first_counterexample = all.into_iter().next();
        report
    }
}

/// Persistent state as a power cut right now would leave it.
fn cut_state(m: &Machine<'_>) -> Persistent {
    let mut m = m.clone();
    m.power_cut(m.now());
    m.persistent()
}

fn compare(point: InjectionPoint, golden: &GoldenState, memory: &[u32], error: Option<SimError>) -> Option<Mismatch> {
    let error = error.map(|e| format!("{e}"));
    let diff: Vec<WordDiff> = golden
        .memory
        .iter()
        .zip(memory.iter().chain(core::iter::repeat(&0)))
        .enumerate()
        .filter(|(_, (g, a))| g != a)
        .map(|(i, (&expected, &actual))| WordDiff { addr: word_addr(i), expected, actual })
        .collect();
    if diff.is_empty() && error.is_none() && memory.len() == golden.memory.len() {
        return None;
    }
    Some(Mismatch { point, differing_words: diff.len(), diff: diff.into_iter().take(MAX_DIFFS).collect(), error })
}

/// Sequential sweep over all cut states.
pub fn verify(r: &Regionized, program: &str, cfg: VerifyConfig) -> Result<VerifyReport, SimError> {
    let v = Verifier::new(r, cfg)?;
    let outcomes: Vec<Outcome> = (0..v.cuts.len()).map(|i| v.check(i)).collect();
    Ok(v.report(program, outcomes))
}
