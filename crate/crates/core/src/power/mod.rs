// Copyright icsim Contributors
// SPDX-License-Identifier: Apache-2.0

//! Voltage traces, supply gating, the adaptive controller and the
//! nonvolatile-processor baseline.

mod adaptive;
mod gen;
mod nvp;
mod supply;
mod trace;

pub use adaptive::{AdaptiveConfig, AdaptiveState, ModeChange};
pub use gen::{gen_trace, TraceSpec, ON_FLOOR_V};
pub use nvp::{simulate_nvp, NvpConfig};
pub use supply::{next_on, on_time, OnWindow, SupplyConfig};
pub use trace::{Level, PowerTrace};
