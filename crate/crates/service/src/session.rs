//! One game: a world, its run state and the ordered messages it emits.
//!
//! [`Session`] is a plain state machine. The async actor in
//! [`crate::server`] owns one and feeds it commands and pacing ticks.

use std::fmt;

use serde::{Deserialize, Serialize};
use swarmsir_core::score::{compute_score, ScoreBreakdown, ScoreInputs};
use swarmsir_core::swarm::{Knobs, SimConfig, Simulation};
use swarmsir_core::{Error as CoreError, SimFrame};

use crate::protocol::{Command, ErrorKind, KnobValues, ServerMessage};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunState {
    Configuring,
    Running,
    Paused,
    Finished,
}

impl fmt::Display for RunState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            RunState::Configuring => "configuring",
            RunState::Running => "running",
            RunState::Paused => "paused",
            RunState::Finished => "finished",
        };
        f.write_str(s)
    }
}

/// A knob change applied after frame `after_step` was produced.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KnobChange {
    pub after_step: u64,
    pub knobs: Knobs,
}

/// Everything needed to regenerate a game's frames.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplayRecord {
    /// Configuration the world was initialized with (seed included).
    pub config: SimConfig,
    pub knob_changes: Vec<KnobChange>,
}

/// Re-runs a recorded game for `steps` steps (clamped to `t_max`) and
/// returns frames `0..=steps`.
pub fn replay(record: &ReplayRecord, steps: u64) -> Result<Vec<SimFrame>, CoreError> {
    let mut sim = Simulation::new(record.config.clone())?;
    let mut frames = vec![sim.last_frame().clone()];
    let mut changes = record.knob_changes.iter().peekable();
    while sim.step_index() < steps {
        while let Some(change) = changes.next_if(|c| c.after_step == sim.step_index()) {
            sim.set_knobs(&change.knobs)?;
        }
        match sim.advance()? {
            Some(frame) => frames.push(frame),
            None => break,
        }
    }
    Ok(frames)
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("{message}")]
pub struct Rejection {
    pub kind: ErrorKind,
    pub state: RunState,
    pub message: String,
}

impl Rejection {
    pub fn to_message(&self) -> ServerMessage {
        ServerMessage::Error {
            kind: self.kind,
            state: self.state,
            message: self.message.clone(),
        }
    }
}

#[derive(Debug)]
pub struct Session {
    config: SimConfig,
    state: RunState,
    sim: Option<Simulation>,
    record: Option<ReplayRecord>,
    peak_infected: usize,
    total_deviation: f64,
    score: Option<ScoreBreakdown>,
}

impl Session {
    pub fn new(config: SimConfig) -> Result<Self, CoreError> {
        config.validate()?;
        Ok(Self {
            config,
            state: RunState::Configuring,
            sim: None,
            record: None,
            peak_infected: 0,
            total_deviation: 0.0,
            score: None,
        })
    }

    pub fn state(&self) -> RunState {
        self.state
    }

    /// Current configuration, including knob changes.
    pub fn config(&self) -> &SimConfig {
        &self.config
    }

    pub fn replay_record(&self) -> Option<&ReplayRecord> {
        self.record.as_ref()
    }

    pub fn final_score(&self) -> Option<ScoreBreakdown> {
        self.score
    }

    /// Frames produced so far in the current game (0 before the world exists).
    pub fn step_index(&self) -> Option<u64> {
        self.sim.as_ref().map(Simulation::step_index)
    }

    fn reject(&self, kind: ErrorKind, message: String) -> Rejection {
        Rejection {
            kind,
            state: self.state,
            message,
        }
    }

    fn illegal(&self, command: &Command) -> Rejection {
        self.reject(
            ErrorKind::IllegalState,
            format!("`{}` is not allowed while {}", command.name(), self.state),
        )
    }

    fn ack(&self, command: &Command) -> ServerMessage {
        ServerMessage::Ack {
            command: command.name().to_string(),
            state: self.state,
            seed: self.config.seed,
            knobs: KnobValues::from(&self.config),
        }
    }

    fn ensure_world(&mut self, out: &mut Vec<ServerMessage>) -> Result<(), Rejection> {
        if self.sim.is_some() {
            return Ok(());
        }
        let sim =
            Simulation::new(self.config.clone()).map_err(|e| self.reject(ErrorKind::Validation, e.to_string()))?;
        self.record = Some(ReplayRecord {
            config: self.config.clone(),
            knob_changes: Vec::new(),
        });
        self.peak_infected = 0;
        self.total_deviation = 0.0;
        self.score = None;
        let first = sim.last_frame().clone();
        self.sim = Some(sim);
        self.emit(&first, out);
        Ok(())
    }

    fn emit(&mut self, frame: &SimFrame, out: &mut Vec<ServerMessage>) {
        self.peak_infected = self.peak_infected.max(frame.counts.i);
        self.total_deviation += frame.control_deviation;
        out.push(ServerMessage::from(frame));
    }

    fn finish(&mut self, out: &mut Vec<ServerMessage>) {
        let breakdown = compute_score(&ScoreInputs {
            peak_infected: self.peak_infected,
            t_recover: self.config.t_recover,
            p_infection: self.config.p_infection,
            t_max: self.config.t_max,
            total_control_deviation: self.total_deviation,
        });
        self.score = Some(breakdown);
        self.state = RunState::Finished;
        out.push(ServerMessage::Score { breakdown });
    }

    /// Advances one step while running; returns the emitted messages.
    pub fn tick(&mut self) -> Result<Vec<ServerMessage>, Rejection> {
        let mut out = Vec::new();
        if self.state == RunState::Running {
            self.advance(&mut out)?;
        }
        Ok(out)
    }

    fn advance(&mut self, out: &mut Vec<ServerMessage>) -> Result<(), Rejection> {
        let sim = self.sim.as_mut().expect("world exists outside configuring");
        let next = sim.advance();
        let finished = sim.is_finished();
        match next {
            Ok(Some(frame)) => self.emit(&frame, out),
            Ok(None) => {}
            Err(e) => return Err(self.reject(ErrorKind::Validation, e.to_string())),
        }
        if finished {
            self.finish(out);
        }
        Ok(())
    }

    /// Applies a command. On success returns the messages to broadcast,
    /// starting with the acknowledgment.
    pub fn handle(&mut self, command: &Command) -> Result<Vec<ServerMessage>, Rejection> {
        let mut out = Vec::new();
        let before = self.state;
        let result = self.dispatch(command, &mut out);
        if result.is_err() {
            self.state = before;
        }
        result.map(|()| out)
    }

    fn dispatch(&mut self, command: &Command, out: &mut Vec<ServerMessage>) -> Result<(), Rejection> {
        use RunState::*;
        match (command, self.state) {
            (
                Command::SetKnobs {
                    p_infection,
                    t_recover,
                    d_social,
                },
                Configuring | Paused,
            ) => {
                let knobs = Knobs {
                    p_infection: *p_infection,
                    t_recover: *t_recover,
                    d_social: *d_social,
                };
                knobs
                    .apply_to(&mut self.config)
                    .map_err(|e| self.reject(ErrorKind::Validation, e.to_string()))?;
                if let (Some(sim), Some(record)) = (self.sim.as_mut(), self.record.as_mut()) {
                    sim.set_knobs(&knobs).expect("validated against the same knob ranges");
                    record.knob_changes.push(KnobChange {
                        after_step: sim.step_index(),
                        knobs,
                    });
                }
                out.push(self.ack(command));
            }
            (Command::Start, Configuring | Paused) => {
                self.state = Running;
                out.push(self.ack(command));
                self.ensure_world(out)?;
            }
            (Command::Pause, Running) => {
                self.state = Paused;
                out.push(self.ack(command));
            }
            (Command::Step { n }, Configuring | Paused) => {
                self.state = Paused;
                out.push(self.ack(command));
                self.ensure_world(out)?;
                for _ in 0..*n {
                    if self.state != Paused {
                        break;
                    }
                    self.advance(out)?;
                }
            }
            (Command::Reset, _) => {
                self.config.seed = self.config.seed.wrapping_add(1);
                self.state = Configuring;
                self.sim = None;
                self.record = None;
                self.score = None;
                out.push(self.ack(command));
            }
            _ => return Err(self.illegal(command)),
        }
        Ok(())
    }
}
