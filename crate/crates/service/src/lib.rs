//! Live session service for the swarm epidemic game.
//!
//! * `POST /sessions` creates a session from config overrides,
//! * `GET /healthz` reports liveness and the session count,
//! * `GET /sessions/{id}/ws` carries commands in and frames out,
//! * `GET /sessions/{id}/replay` returns the replay record,
//! * `GET /scores` lists the best finished games of this process.

pub mod protocol;
pub mod server;
pub mod session;

pub use protocol::{Command, ErrorKind, KnobValues, ServerMessage};
pub use server::{router, serve, AppState, ServiceConfig};
pub use session::{replay, KnobChange, ReplayRecord, RunState, Session};
