// Copyright icsim Contributors
// SPDX-License-Identifier: Apache-2.0

//! Energy constants and the per-category meter.
//!
//! All energy is kept in integer femtojoules. A power in microwatts held
//! for a time in nanoseconds is exactly that many femtojoules.

use core::fmt;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "kebab-case"))]
pub enum SearchScheme {
    #[default]
    Sequential,
    Cam,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default))]
pub struct EnergyModel {
    pub compute_uw_per_mhz: u64,
    pub nvm_power_uw: u64,
    /// Power drawn while going to sleep or waking up.
    pub transition_power_uw: u64,
    pub search: SearchScheme,
    pub search_sequential_fj: u64,
    pub search_cam_fj: u64,
}

impl Default for EnergyModel {
    fn default() -> Self {
        EnergyModel {
            compute_uw_per_mhz: 100,
            nvm_power_uw: 2000,
            transition_power_uw: 100,
            search: SearchScheme::Sequential,
            search_sequential_fj: 1000,
            search_cam_fj: 2000,
        }
    }
}

impl EnergyModel {
    /// Core energy for one cycle. Power scales with frequency, so the
    /// clock period cancels: `uW/MHz * (1000/T) MHz * T ns`.
    pub fn cycle_fj(&self) -> u64 {
        self.compute_uw_per_mhz * 1000
    }

    pub fn nvm_fj(&self, ns: u64) -> u64 {
        self.nvm_power_uw * ns
    }

    pub fn search_fj(&self) -> u64 {
        match self.search {
            SearchScheme::Sequential => self.search_sequential_fj,
            SearchScheme::Cam => self.search_cam_fj,
        }
    }

    pub fn transition_fj(&self, ns: u64) -> u64 {
        self.transition_power_uw * ns
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Category {
    Phase1Success,
    Phase1Misspec,
    Phase2Success,
    Phase2Misspec,
    ComputeSuccess,
    ComputeMisspec,
    NoIlp,
    ReExec,
    SleepWakeup,
    Search,
}

impl Category {
    pub const ALL: [Category; 10] = [
        Category::Phase1Success,
        Category::Phase1Misspec,
        Category::Phase2Success,
        Category::Phase2Misspec,
        Category::ComputeSuccess,
        Category::ComputeMisspec,
        Category::NoIlp,
        Category::ReExec,
        Category::SleepWakeup,
        Category::Search,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Category::Phase1Success => "phase1-success",
            Category::Phase1Misspec => "phase1-misspec",
            Category::Phase2Success => "phase2-success",
            Category::Phase2Misspec => "phase2-misspec",
            Category::ComputeSuccess => "compute-success",
            Category::ComputeMisspec => "compute-misspec",
            Category::NoIlp => "no-ilp",
            Category::ReExec => "re-exec",
            Category::SleepWakeup => "sleep-wakeup",
            Category::Search => "search",
        }
    }
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub struct EnergyMeter {
    fj: [u64; 10],
}

impl EnergyMeter {
    pub fn add(&mut self, c: Category, fj: u64) {
        self.fj[c as usize] += fj;
    }

    pub fn get(&self, c: Category) -> u64 {
        self.fj[c as usize]
    }

    pub fn total(&self) -> u64 {
        self.fj.iter().sum()
    }

    pub fn iter(&self) -> impl Iterator<Item = (Category, u64)> + '_ {
        Category::ALL.iter().map(|&c| (c, self.get(c)))
    }
}

#[cfg(feature = "serde")]
impl serde::Serialize for EnergyMeter {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        use serde::ser::SerializeMap;
        let mut m = s.serialize_map(Some(11))?;
        for (c, v) in self.iter() {
            m.serialize_entry(c.name(), &v)?;
        }
        m.serialize_entry("total", &self.total())?;
        m.end()
    }
}
