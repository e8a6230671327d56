//! Agent-based SIR on a random-walking swarm.

mod config;
mod ensemble;
mod world;

pub use config::{DeviationNorm, Knobs, SimConfig};
pub use ensemble::{ensemble_run, is_unimodal, smooth, EnsembleSummary, RunSummary};
pub use world::{nominal_control, Agent, FilterOutcome, HealthState, World, COINCIDENCE_JITTER};

use crate::error::Result;
use crate::frame::{SimFrame, SimTrajectory};

/// Step driver that produces exactly `t_max + 1` frames.
///
/// Once no agent is infected the counts can never change again, so the
/// world stops moving and the remaining frames repeat the terminal state.
#[derive(Debug, Clone)]
pub struct Simulation {
    world: World,
    last: SimFrame,
    extinct: bool,
}

impl Simulation {
    pub fn new(config: SimConfig) -> Result<Self> {
        let world = World::new(config)?;
        let last = world.frame(0, 0.0);
        let extinct = last.counts.i == 0;
        Ok(Self { world, last, extinct })
    }

    pub fn world(&self) -> &World {
        &self.world
    }

    pub fn config(&self) -> &SimConfig {
        &self.world.config
    }

    /// The most recently produced frame (frame 0 before any step).
    pub fn last_frame(&self) -> &SimFrame {
        &self.last
    }

    pub fn step_index(&self) -> u64 {
        self.last.step
    }

    pub fn is_finished(&self) -> bool {
        self.last.step >= self.world.config.t_max
    }

    /// Retunes the mitigation knobs; they take effect on the next step.
    pub fn set_knobs(&mut self, knobs: &Knobs) -> Result<()> {
        knobs.apply_to(&mut self.world.config)
    }

    /// Produces the next frame, or `None` once `t_max` has been reached.
    pub fn advance(&mut self) -> Result<Option<SimFrame>> {
        if self.is_finished() {
            return Ok(None);
        }
        let frame = if self.extinct {
            self.last.padded(self.last.step + 1)
        } else {
            let f = self.world.step()?;
            self.extinct = f.counts.i == 0;
            f
        };
        self.last = frame.clone();
        Ok(Some(frame))
    }
}

/// Initializes the world and runs it to `t_max`.
pub fn run(config: SimConfig) -> Result<SimTrajectory> {
    let mut sim = Simulation::new(config.clone())?;
    let mut frames = Vec::with_capacity(config.t_max as usize + 1);
    frames.push(sim.last_frame().clone());
    while let Some(frame) = sim.advance()? {
        frames.push(frame);
    }
    Ok(SimTrajectory::from_frames(config, frames))
}
