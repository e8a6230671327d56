//! Mitigation-game score.
//!
//! ```text
//! s   = 100 (s_h + s_f + s_p + s_e)
//! s_h = 10 / (1 + peak) + 10 / (1 + T_recover)
//! s_f = P_infection + min(T_max / max(sum |u* - u_nominal|, EPS), FREEDOM_CAP)
//! s_p = 10 / (1 + peak)
//! s_e = 0.1 T_recover + 10 (1 - P_infection) + 10 / (1 + peak)
//! ```
//!
//! The component names (health, freedom, peak, economy) are labels for the
//! four terms.

use serde::{Deserialize, Serialize};

use crate::frame::SimTrajectory;

/// Guard against division by a zero control effort.
pub const EPS: f64 = 1e-9;
/// Upper bound on the effort ratio in the freedom term.
pub const FREEDOM_CAP: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScoreInputs {
    pub peak_infected: usize,
    pub t_recover: u32,
    pub p_infection: f64,
    pub t_max: u64,
    pub total_control_deviation: f64,
}

impl ScoreInputs {
    /// Knobs and horizon from the run's config; note that live retuning
    /// means the trajectory's config holds the final knob values.
    pub fn from_trajectory(traj: &SimTrajectory) -> Self {
        Self {
            peak_infected: traj.peak_infected,
            t_recover: traj.config.t_recover,
            p_infection: traj.config.p_infection,
            t_max: traj.config.t_max,
            total_control_deviation: control_effort(traj),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScoreBreakdown {
    pub s_h: f64,
    pub s_f: f64,
    pub s_p: f64,
    pub s_e: f64,
    pub s: f64,
}

pub fn compute_score(inputs: &ScoreInputs) -> ScoreBreakdown {
    let peak_term = 10.0 / (1.0 + inputs.peak_infected as f64);
    let t_recover = f64::from(inputs.t_recover);
    let effort = inputs.total_control_deviation.max(EPS);

    let s_h = peak_term + 10.0 / (1.0 + t_recover);
    let s_f = inputs.p_infection + (inputs.t_max as f64 / effort).min(FREEDOM_CAP);
    let s_p = peak_term;
    let s_e = 0.1 * t_recover + 10.0 * (1.0 - inputs.p_infection) + peak_term;
    ScoreBreakdown {
        s_h,
        s_f,
        s_p,
        s_e,
        s: 100.0 * (s_h + s_f + s_p + s_e),
    }
}

/// Sum of the per-frame control deviations over steps `0..=T_max`.
pub fn control_effort(traj: &SimTrajectory) -> f64 {
    traj.frames.iter().map(|f| f.control_deviation).sum()
}

pub fn score_trajectory(traj: &SimTrajectory) -> ScoreBreakdown {
    compute_score(&ScoreInputs::from_trajectory(traj))
}
