use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::safety::DEFAULT_TOLERANCE;

/// Per-step control deviation norm over the stacked velocity error.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DeviationNorm {
    /// Euclidean norm of the stacked `2N` vector `u* - u_nominal`.
    #[default]
    Stacked,
    /// Sum over agents of `|u*_i - u_nominal_i|`.
    PerAgentSum,
}

/// Full description of one agent-based run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    pub n_agents: usize,
    pub arena_width: f64,
    pub arena_height: f64,
    /// Probability that a contact onset between infected and susceptible transmits.
    pub p_infection: f64,
    /// Steps an agent stays infected.
    pub t_recover: u32,
    /// Transmission distance.
    pub d_thresh: f64,
    /// Enforced social distance; 0 disables the safety filter.
    pub d_social: f64,
    /// Slope of the linear class-K function in the barrier condition.
    pub gamma: f64,
    /// Speed cap, units per step.
    pub v_max: f64,
    pub waypoint_tolerance: f64,
    pub initial_infected: usize,
    pub vaccinated_fraction: f64,
    pub t_max: u64,
    pub seed: u64,
    pub qp_tolerance: f64,
    pub deviation_norm: DeviationNorm,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            n_agents: 100,
            arena_width: 10.0,
            arena_height: 10.0,
            p_infection: 1.0,
            t_recover: 50,
            d_thresh: 0.2,
            d_social: 0.0,
            gamma: 1.0,
            v_max: 0.1,
            waypoint_tolerance: 0.05,
            initial_infected: 1,
            vaccinated_fraction: 0.0,
            t_max: 1000,
            seed: 0,
            qp_tolerance: DEFAULT_TOLERANCE,
            deviation_norm: DeviationNorm::Stacked,
        }
    }
}

fn positive(field: &'static str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::invalid(field, format!("{v} must be finite and > 0")))
    }
}

fn non_negative(field: &'static str, v: f64) -> Result<()> {
    if v.is_finite() && v >= 0.0 {
        Ok(())
    } else {
        Err(Error::invalid(field, format!("{v} must be finite and >= 0")))
    }
}

fn unit_interval(field: &'static str, v: f64) -> Result<()> {
    if (0.0..=1.0).contains(&v) {
        Ok(())
    } else {
        Err(Error::invalid(field, format!("{v} not in [0, 1]")))
    }
}

impl SimConfig {
    pub fn n_vaccinated(&self) -> usize {
        (self.vaccinated_fraction * self.n_agents as f64).round() as usize
    }

    /// Checks the knob ranges only; used for mid-run retuning.
    pub fn validate_knobs(&self) -> Result<()> {
        unit_interval("p_infection", self.p_infection)?;
        non_negative("d_social", self.d_social)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_agents == 0 {
            return Err(Error::invalid("n_agents", "must be >= 1"));
        }
        positive("arena_width", self.arena_width)?;
        positive("arena_height", self.arena_height)?;
        self.validate_knobs()?;
        non_negative("d_thresh", self.d_thresh)?;
        if self.d_thresh >= self.arena_width.min(self.arena_height) {
            return Err(Error::invalid(
                "d_thresh",
                format!("{} must be below the arena's shorter side", self.d_thresh),
            ));
        }
        positive("gamma", self.gamma)?;
        positive("v_max", self.v_max)?;
        positive("waypoint_tolerance", self.waypoint_tolerance)?;
        unit_interval("vaccinated_fraction", self.vaccinated_fraction)?;
        if self.initial_infected + self.n_vaccinated() > self.n_agents {
            return Err(Error::invalid(
                "initial_infected",
                format!(
                    "{} infected plus {} vaccinated exceed {} agents",
                    self.initial_infected,
                    self.n_vaccinated(),
                    self.n_agents
                ),
            ));
        }
        if self.t_max == 0 {
            return Err(Error::invalid("t_max", "must be >= 1"));
        }
        positive("qp_tolerance", self.qp_tolerance)
    }
}

/// The three live-tunable mitigation parameters.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Knobs {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p_infection: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_recover: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d_social: Option<f64>,
}

impl Knobs {
    /// Applies the set knobs onto `config`, leaving it untouched on error.
    pub fn apply_to(&self, config: &mut SimConfig) -> Result<()> {
        let mut next = config.clone();
        if let Some(p) = self.p_infection {
            next.p_infection = p;
        }
        if let Some(t) = self.t_recover {
            next.t_recover = t;
        }
        if let Some(d) = self.d_social {
            next.d_social = d;
        }
        next.validate_knobs()?;
        *config = next;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid() {
        let c = SimConfig::default();
        c.validate().unwrap();
        assert_eq!(
            (c.n_agents, c.t_recover, c.p_infection, c.d_thresh),
            (100, 50, 1.0, 0.2)
        );
    }

    #[test]
    fn validation_names_field() {
        let check = |f: fn(&mut SimConfig), field: &str| {
            let mut c = SimConfig::default();
            f(&mut c);
            match c.validate() {
                Err(Error::InvalidInput { field: got, .. }) => assert_eq!(got, field),
                other => panic!("expected error on {field}, got {other:?}"),
            }
        };
        check(|c| c.p_infection = 1.5, "p_infection");
        check(|c| c.d_social = -0.1, "d_social");
        check(|c| c.n_agents = 0, "n_agents");
        check(|c| c.d_thresh = 10.0, "d_thresh");
        check(|c| c.v_max = 0.0, "v_max");
        check(|c| c.t_max = 0, "t_max");
        check(
            |c| {
                c.initial_infected = 60;
                c.vaccinated_fraction = 0.5;
            },
            "initial_infected",
        );
    }

    #[test]
    fn knobs_apply_atomically() {
        let mut c = SimConfig::default();
        let bad = Knobs {
            p_infection: Some(0.2),
            d_social: Some(-1.0),
            ..Knobs::default()
        };
        assert!(bad.apply_to(&mut c).is_err());
        assert_eq!(c, SimConfig::default());
        Knobs {
            t_recover: Some(7),
            ..Knobs::default()
        }
        .apply_to(&mut c)
        .unwrap();
        assert_eq!(c.t_recover, 7);
    }
}
