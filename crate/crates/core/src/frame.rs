//! Per-step snapshots shared by file exports and the live wire protocol.

use serde::{Deserialize, Serialize};

use crate::swarm::{HealthState, SimConfig};

/// Compact health label; rendered blue, red, green and yellow by clients.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum HealthTag {
    S,
    I,
    R,
    V,
}

impl From<HealthState> for HealthTag {
    fn from(h: HealthState) -> Self {
        match h {
            HealthState::Susceptible => HealthTag::S,
            HealthState::Infected { .. } => HealthTag::I,
            HealthState::Recovered => HealthTag::R,
            HealthState::Vaccinated => HealthTag::V,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AgentSnapshot {
    pub id: usize,
    pub x: f64,
    pub y: f64,
    pub state: HealthTag,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Counts {
    pub s: usize,
    pub i: usize,
    pub r: usize,
    pub v: usize,
}

impl Counts {
    pub fn total(&self) -> usize {
        self.s + self.i + self.r + self.v
    }

    pub fn tally<I: IntoIterator<Item = HealthTag>>(tags: I) -> Self {
        let mut c = Counts::default();
        for t in tags {
            match t {
                HealthTag::S => c.s += 1,
                HealthTag::I => c.i += 1,
                HealthTag::R => c.r += 1,
                HealthTag::V => c.v += 1,
            }
        }
        c
    }

    pub fn as_array(&self) -> [usize; 4] {
        [self.s, self.i, self.r, self.v]
    }
}

/// How the step's velocities were produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FilterStatus {
    /// No filtering: `d_social == 0`, the initial frame, or a padded frame.
    Disabled,
    Optimal,
    Fallback,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimFrame {
    pub step: u64,
    pub agents: Vec<AgentSnapshot>,
    pub counts: Counts,
    pub active_constraints: usize,
    pub control_deviation: f64,
    pub filter: FilterStatus,
}

impl SimFrame {
    /// Copy of a terminal frame re-labelled as `step`, with no control activity.
    pub fn padded(&self, step: u64) -> SimFrame {
        SimFrame {
            step,
            agents: self.agents.clone(),
            counts: self.counts,
            active_constraints: 0,
            control_deviation: 0.0,
            filter: FilterStatus::Disabled,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimTrajectory {
    pub config: SimConfig,
    pub frames: Vec<SimFrame>,
    pub peak_infected: usize,
    pub total_control_deviation: f64,
}

impl SimTrajectory {
    pub fn from_frames(config: SimConfig, frames: Vec<SimFrame>) -> Self {
        let peak_infected = frames.iter().map(|f| f.counts.i).max().unwrap_or(0);
        let total_control_deviation = frames.iter().map(|f| f.control_deviation).sum();
        Self {
            config,
            frames,
            peak_infected,
            total_control_deviation,
        }
    }

    pub fn counts(&self) -> impl Iterator<Item = Counts> + '_ {
        self.frames.iter().map(|f| f.counts)
    }

    pub fn final_counts(&self) -> Counts {
        self.frames.last().map(|f| f.counts).unwrap_or_default()
    }

    /// First step at which the infected count peaks.
    pub fn time_of_peak(&self) -> u64 {
        self.frames
            .iter()
            .find(|f| f.counts.i == self.peak_infected)
            .map(|f| f.step)
            .unwrap_or(0)
    }
}
