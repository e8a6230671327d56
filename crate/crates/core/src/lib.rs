//! Deterministic SIR epidemics on a swarm of random-walking agents.
//!
//! The crate is split along the lines of the experiment it reproduces:
//!
//! * [`sir`] integrates the continuous compartment model,
//! * [`swarm`] runs the agent-based counterpart with proximity contacts,
//! * [`safety`] filters nominal velocities through a pairwise
//!   control-barrier-function QP to enforce a social distance,
//! * [`score`] evaluates the mitigation game on a finished trajectory.

pub mod error;
pub mod frame;
pub mod rng;
pub mod safety;
pub mod score;
pub mod sir;
pub mod spatial;
pub mod swarm;
pub mod vec2;

pub use error::{Error, Result};
pub use frame::{AgentSnapshot, Counts, FilterStatus, HealthTag, SimFrame, SimTrajectory};
pub use vec2::Vec2;
