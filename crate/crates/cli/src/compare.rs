use serde::{Deserialize, Serialize};
use swarmsir_core::sir::{integrate_sir, SirTrajectory};
use swarmsir_core::swarm::{ensemble_run, is_unimodal, EnsembleSummary};

use crate::error::{CliError, Result};
use crate::scenario::Scenario;

/// `|agent - ode| / max(ode, 1)`.
pub fn relative_error(agent: f64, ode: f64) -> f64 {
    (agent - ode).abs() / ode.max(1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OdeSummary {
    pub peak_infected: f64,
    pub time_of_peak: f64,
    pub final_susceptible: f64,
}

impl OdeSummary {
    pub fn of(traj: &SirTrajectory) -> Self {
        let (k, peak) = traj.peak_infected();
        Self {
            peak_infected: peak,
            time_of_peak: traj.time_of(k),
            final_susceptible: traj.final_state().s,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleStats {
    pub n_runs: usize,
    pub base_seed: u64,
    pub mean_peak_infected: f64,
    pub std_peak_infected: f64,
    pub mean_time_of_peak: f64,
    pub std_time_of_peak: f64,
    pub mean_final_susceptible: f64,
    pub std_final_susceptible: f64,
    /// Runs that ended with no infected agent.
    pub extinct_runs: usize,
    pub unimodal: bool,
}

impl EnsembleStats {
    pub fn of(summary: &EnsembleSummary, base_seed: u64, half_window: usize) -> Self {
        let (mean_peak_infected, std_peak_infected) = summary.peak_infected();
        let (mean_time_of_peak, std_time_of_peak) = summary.time_of_peak();
        let (mean_final_susceptible, std_final_susceptible) = summary.final_susceptible();
        Self {
            n_runs: summary.runs.len(),
            base_seed,
            mean_peak_infected,
            std_peak_infected,
            mean_time_of_peak,
            std_time_of_peak,
            mean_final_susceptible,
            std_final_susceptible,
            extinct_runs: summary.runs.iter().filter(|r| r.final_counts.i == 0).count(),
            unimodal: is_unimodal(&summary.mean_infected(), half_window),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub scenario: Scenario,
    pub ode: OdeSummary,
    pub ensemble: EnsembleStats,
    pub peak_relative_error: f64,
    pub final_s_relative_error: f64,
    pub checks: Vec<Check>,
    pub pass: bool,
}

impl ComparisonReport {
    /// `Err(Tolerance)` naming the failed checks when the report did not pass.
    pub fn into_result(self) -> Result<Self> {
        if self.pass {
            return Ok(self);
        }
        let failed: Vec<&str> = self
            .checks
            .iter()
            .filter(|c| !c.pass)
            .map(|c| c.name.as_str())
            .collect();
        Err(CliError::Tolerance(failed.join(", ")))
    }
}

/// Integrates the ODE reference, runs the agent ensemble with the same
/// knobs and checks the configured tolerances.
pub fn compare_ode_agents(scenario: &Scenario) -> Result<ComparisonReport> {
    let o = &scenario.ode;
    let ode = OdeSummary::of(&integrate_sir(o.initial, o.params, o.horizon, o.dt)?);
    let c = &scenario.compare;
    let ens = ensemble_run(&scenario.sim, c.n_runs)?;
    let ensemble = EnsembleStats::of(&ens, scenario.sim.seed, c.smoothing_half_window);

    let peak_relative_error = relative_error(ensemble.mean_peak_infected, ode.peak_infected);
    let final_s_relative_error = relative_error(ensemble.mean_final_susceptible, ode.final_susceptible);
    let mut checks = vec![
        Check {
            name: "peak_infected".into(),
            pass: peak_relative_error <= c.peak_tolerance,
            detail: format!(
                "agents {:.3} vs ode {:.3}, relative error {peak_relative_error:.4} (tolerance {})",
                ensemble.mean_peak_infected, ode.peak_infected, c.peak_tolerance
            ),
        },
        Check {
            name: "final_susceptible".into(),
            pass: final_s_relative_error <= c.final_s_tolerance,
            detail: format!(
                "agents {:.3} vs ode {:.3}, relative error {final_s_relative_error:.4} (tolerance {})",
                ensemble.mean_final_susceptible, ode.final_susceptible, c.final_s_tolerance
            ),
        },
    ];
    if c.require_extinction {
        checks.push(Check {
            name: "extinction".into(),
            pass: ensemble.extinct_runs == ensemble.n_runs,
            detail: format!("{} of {} runs end with I = 0", ensemble.extinct_runs, ensemble.n_runs),
        });
    }
    if c.require_unimodal {
        checks.push(Check {
            name: "unimodal".into(),
            pass: ensemble.unimodal,
            detail: format!("mean I smoothed over +-{} steps", c.smoothing_half_window),
        });
    }
    let pass = checks.iter().all(|c| c.pass);
    Ok(ComparisonReport {
        scenario: scenario.clone(),
        ode,
        ensemble,
        peak_relative_error,
        final_s_relative_error,
        checks,
        pass,
    })
}
