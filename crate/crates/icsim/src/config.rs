// Copyright icsim Contributors
// SPDX-License-Identifier: Apache-2.0

//! TOML run configuration.
//!
//! Every key is optional. Top-level keys cover the machine and the run,
//! the tables `[timing]`, `[energy]`, `[adaptive]`, `[supply]` and
//! `[nvp_supply]` map onto the corresponding model parameters.

use std::path::Path;

use anyhow::{Context, Result};
use icsim_core::machine::{EnergyModel, MachineConfig, TimingModel};
use icsim_core::persistence::Protocol;
use icsim_core::power::{AdaptiveConfig, NvpConfig, SupplyConfig};
use icsim_core::sim::SimConfig;
use icsim_core::verify::VerifyConfig;
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub sb_size: usize,
    pub ilp: bool,
    pub protocol: Protocol,
    pub naive: bool,
    /// Instruction cap for simulated runs.
    pub budget: u64,
    pub stagnation_outages: u64,
    pub max_time_us: Option<u64>,
    /// Instruction cap for the reference run of `verify`.
    pub verify_budget: u64,
    pub double_failure: bool,
    pub timing: TimingModel,
    pub energy: EnergyModel,
    pub adaptive: AdaptiveConfig,
    pub supply: SupplyConfig,
    pub nvp_supply: SupplyConfig,
}

impl Default for Config {
    fn default() -> Self {
        let sim = SimConfig::default();
        let machine = MachineConfig::default();
        let verify = VerifyConfig::default();
        Config {
            sb_size: machine.sb_size,
            ilp: machine.ilp,
            protocol: machine.protocol,
            naive: machine.naive,
            budget: sim.budget,
            stagnation_outages: sim.stagnation_outages,
            max_time_us: None,
            verify_budget: verify.budget,
            double_failure: verify.double_failure,
            timing: machine.timing,
            energy: machine.energy,
            adaptive: machine.adaptive,
            supply: SupplyConfig::speculative(),
            nvp_supply: SupplyConfig::nvp(),
        }
    }
}

impl Config {
    pub fn load(path: &Path) -> Result<Config> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))
    }

    pub fn machine(&self) -> MachineConfig {
        MachineConfig {
            timing: self.timing,
            energy: self.energy,
            sb_size: self.sb_size,
            ilp: self.ilp,
            protocol: self.protocol,
            naive: self.naive,
            adaptive: self.adaptive,
            ..MachineConfig::default()
        }
    }

    pub fn sim(&self) -> SimConfig {
        SimConfig {
            machine: self.machine(),
            supply: self.supply,
            budget: self.budget,
            stagnation_outages: self.stagnation_outages,
            max_time_ns: self.max_time_us.map(|us| us.saturating_mul(1000)),
        }
    }

    pub fn nvp(&self) -> NvpConfig {
        NvpConfig { timing: self.timing, energy: self.energy, supply: self.nvp_supply, budget: self.budget }
    }

    pub fn verify(&self) -> VerifyConfig {
        VerifyConfig { machine: self.machine(), budget: self.verify_budget, double_failure: self.double_failure }
    }
}
