//! JSON messages exchanged on a session socket. Every message is an object
//! with a `type` discriminator; see `docs/wire-protocol.md`.

use serde::{Deserialize, Serialize};
use swarmsir_core::score::ScoreBreakdown;
use swarmsir_core::swarm::SimConfig;
use swarmsir_core::{AgentSnapshot, Counts, SimFrame};

use crate::session::RunState;

/// Client to server.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum Command {
    SetKnobs {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        p_infection: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        t_recover: Option<u32>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        d_social: Option<f64>,
    },
    Start,
    Pause,
    Reset,
    Step {
        n: u64,
    },
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::SetKnobs { .. } => "set_knobs",
            Command::Start => "start",
            Command::Pause => "pause",
            Command::Reset => "reset",
            Command::Step { .. } => "step",
        }
    }
}

/// Current values of the three knobs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KnobValues {
    pub p_infection: f64,
    pub t_recover: u32,
    pub d_social: f64,
}

impl From<&SimConfig> for KnobValues {
    fn from(c: &SimConfig) -> Self {
        Self {
            p_infection: c.p_infection,
            t_recover: c.t_recover,
            d_social: c.d_social,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorKind {
    IllegalState,
    Validation,
    BadMessage,
}

/// Server to client.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ServerMessage {
    Frame {
        step: u64,
        agents: Vec<AgentSnapshot>,
        counts: Counts,
        deviation: f64,
    },
    Score {
        breakdown: ScoreBreakdown,
    },
    Ack {
        command: String,
        state: RunState,
        seed: u64,
        knobs: KnobValues,
    },
    Error {
        kind: ErrorKind,
        state: RunState,
        message: String,
    },
}

impl From<&SimFrame> for ServerMessage {
    fn from(f: &SimFrame) -> Self {
        ServerMessage::Frame {
            step: f.step,
            agents: f.agents.clone(),
            counts: f.counts,
            deviation: f.control_deviation,
        }
    }
}

impl ServerMessage {
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("server messages always serialize")
    }
}
