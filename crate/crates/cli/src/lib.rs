//! Batch front end: scenario files, trajectory export and the ODE versus
//! agent-ensemble comparison. The `swarmsir` binary wires these to
//! subcommands.

pub mod compare;
pub mod error;
pub mod export;
pub mod scenario;

pub use compare::{compare_ode_agents, relative_error, ComparisonReport};
pub use error::{CliError, ExitCode};
pub use export::{config_digest, export_trajectory, import_json, ExportFormat, ExportMeta};
pub use scenario::{load_config, parse_scenario, Scenario};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
