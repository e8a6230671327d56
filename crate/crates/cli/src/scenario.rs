//! Scenario files: one TOML document with `[sim]`, `[ode]` and `[compare]`
//! tables. Every table and key is optional; unknown keys are rejected.

use std::path::Path;

use serde::{Deserialize, Serialize};
use swarmsir_core::sir::{alpha_from_recovery, beta_from_contact, SirParams, SirState, RECOVERY_CONSTANT};
use swarmsir_core::swarm::SimConfig;

use crate::error::{CliError, Result};

/// `[ode]` as written in the file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OdeSection {
    pub beta: Option<f64>,
    pub alpha: Option<f64>,
    /// Derive beta and alpha from `sim.p_infection` and `sim.t_recover`.
    pub derive_from_knobs: bool,
    pub contact_rate: f64,
    pub recovery_constant: f64,
    pub s0: Option<f64>,
    pub i0: Option<f64>,
    pub r0: Option<f64>,
    /// Defaults to `sim.t_max`.
    pub horizon: Option<f64>,
    pub dt: f64,
}

impl Default for OdeSection {
    fn default() -> Self {
        Self {
            beta: None,
            alpha: None,
            derive_from_knobs: false,
            contact_rate: 0.001,
            recovery_constant: RECOVERY_CONSTANT,
            s0: None,
            i0: None,
            r0: None,
            horizon: None,
            dt: 1.0,
        }
    }
}

const DEFAULT_BETA: f64 = 0.001;
const DEFAULT_ALPHA: f64 = 0.025;

/// `[compare]`: ensemble size and acceptance tolerances.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CompareSettings {
    pub n_runs: usize,
    /// Relative tolerance on the mean peak infected count.
    pub peak_tolerance: f64,
    /// Relative tolerance on the mean final susceptible count.
    pub final_s_tolerance: f64,
    pub require_extinction: bool,
    pub require_unimodal: bool,
    pub smoothing_half_window: usize,
}

impl Default for CompareSettings {
    fn default() -> Self {
        Self {
            n_runs: 50,
            peak_tolerance: 0.25,
            final_s_tolerance: 0.25,
            require_extinction: true,
            require_unimodal: true,
            smoothing_half_window: 2,
        }
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct ScenarioFile {
    sim: SimConfig,
    ode: OdeSection,
    compare: CompareSettings,
}

/// Resolved ODE reference problem.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OdeSettings {
    pub initial: SirState,
    pub params: SirParams,
    pub horizon: f64,
    pub dt: f64,
}

/// A validated scenario with every default and derived value filled in.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub sim: SimConfig,
    pub ode: OdeSettings,
    pub compare: CompareSettings,
}

impl Default for Scenario {
    fn default() -> Self {
        resolve(ScenarioFile::default()).expect("defaults are valid")
    }
}

fn field(name: &str, reason: impl Into<String>) -> CliError {
    CliError::Validation {
        field: name.to_string(),
        reason: reason.into(),
    }
}

fn resolve(file: ScenarioFile) -> Result<Scenario> {
    let ScenarioFile { sim, ode, compare } = file;
    sim.validate().map_err(|e| CliError::from_core("sim", e))?;

    let (beta, alpha) = if ode.derive_from_knobs {
        if ode.beta.is_some() {
            return Err(field("ode.beta", "cannot be set together with derive_from_knobs"));
        }
        if ode.alpha.is_some() {
            return Err(field("ode.alpha", "cannot be set together with derive_from_knobs"));
        }
        let beta = beta_from_contact(sim.p_infection, ode.contact_rate).map_err(|e| CliError::from_core("ode", e))?;
        let alpha = alpha_from_recovery(f64::from(sim.t_recover), ode.recovery_constant)
            .map_err(|e| CliError::from_core("ode", e))?;
        (beta, alpha)
    } else {
        (ode.beta.unwrap_or(DEFAULT_BETA), ode.alpha.unwrap_or(DEFAULT_ALPHA))
    };
    let params = SirParams::new(beta, alpha).map_err(|e| CliError::from_core("ode", e))?;

    // Defaults follow the agent population: vaccinated agents start removed.
    let n = sim.n_agents as f64;
    let i0 = ode.i0.unwrap_or(sim.initial_infected as f64);
    let r0 = ode.r0.unwrap_or(sim.n_vaccinated() as f64);
    let s0 = ode.s0.unwrap_or(n - i0 - r0);
    let initial = SirState::new(s0, i0, r0).map_err(|e| CliError::from_core("ode", e))?;

    let horizon = ode.horizon.unwrap_or(sim.t_max as f64);
    if !(horizon.is_finite() && horizon > 0.0) {
        return Err(field("ode.horizon", format!("{horizon} must be > 0")));
    }
    if !(ode.dt.is_finite() && ode.dt > 0.0 && ode.dt <= horizon) {
        return Err(field("ode.dt", format!("{} must be in (0, horizon]", ode.dt)));
    }

    if compare.n_runs == 0 {
        return Err(field("compare.n_runs", "must be >= 1"));
    }
    for (name, tol) in [
        ("compare.peak_tolerance", compare.peak_tolerance),
        ("compare.final_s_tolerance", compare.final_s_tolerance),
    ] {
        if !(tol.is_finite() && tol >= 0.0) {
            return Err(field(name, format!("{tol} must be >= 0")));
        }
    }

    Ok(Scenario {
        sim,
        ode: OdeSettings {
            initial,
            params,
            horizon,
            dt: ode.dt,
        },
        compare,
    })
}

fn line_column(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let column = before.rsplit('\n').next().map_or(0, |l| l.chars().count()) + 1;
    (line, column)
}

/// Parses scenario text; `origin` only labels error messages.
pub fn parse_scenario(text: &str, origin: &Path) -> Result<Scenario> {
    let file: ScenarioFile = toml::from_str(text).map_err(|e| {
        let (line, column) = e.span().map_or((1, 1), |s| line_column(text, s.start));
        CliError::Parse {
            path: origin.to_path_buf(),
            line,
            column,
            message: e.message().to_string(),
        }
    })?;
    resolve(file)
}

pub fn load_config(path: impl AsRef<Path>) -> Result<Scenario> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("cannot read scenario {}: {e}", path.display())))?;
    parse_scenario(&text, path)
}
