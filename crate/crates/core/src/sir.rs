//! Continuous SIR compartment model and its forward-Euler integrator.
//!
//! ```text
//! dS/dt = -beta * I * S
//! dI/dt =  beta * I * S - alpha * I
//! dR/dt =  alpha * I
//! ```

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default proportionality between recovery rate and recovery time,
/// `alpha = RECOVERY_CONSTANT / t_recover`. Pairs alpha = 0.025 with
/// a recovery time of 50 steps.
pub const RECOVERY_CONSTANT: f64 = 1.25;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SirState {
    pub s: f64,
    pub i: f64,
    pub r: f64,
}

impl SirState {
    pub fn new(s: f64, i: f64, r: f64) -> Result<Self> {
        let state = Self { s, i, r };
        state.validate()?;
        Ok(state)
    }

    /// Minimal seeding: one infected, everyone else susceptible.
    pub fn seeded(population: f64) -> Self {
        Self {
            s: population - 1.0,
            i: 1.0,
            r: 0.0,
        }
    }

    pub fn population(&self) -> f64 {
        self.s + self.i + self.r
    }

    fn validate(&self) -> Result<()> {
        for (field, v) in [("s", self.s), ("i", self.i), ("r", self.r)] {
            if !v.is_finite() {
                return Err(Error::invalid(field, format!("{v} is not finite")));
            }
            if v < 0.0 {
                return Err(Error::invalid(field, format!("{v} is negative")));
            }
        }
        Ok(())
    }
}

/// Transmission and recovery coefficients.
///
/// `beta` may be zero (no transmission); `alpha` must be strictly positive.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SirParams {
    pub beta: f64,
    pub alpha: f64,
}

impl SirParams {
    pub fn new(beta: f64, alpha: f64) -> Result<Self> {
        let params = Self { beta, alpha };
        params.validate()?;
        Ok(params)
    }

    /// Susceptible level at which the infected curve peaks.
    pub fn threshold(&self) -> f64 {
        self.alpha / self.beta
    }

    fn validate(&self) -> Result<()> {
        if !self.beta.is_finite() || self.beta < 0.0 {
            return Err(Error::invalid("beta", format!("{} must be finite and >= 0", self.beta)));
        }
        if !self.alpha.is_finite() || self.alpha <= 0.0 {
            return Err(Error::invalid(
                "alpha",
                format!("{} must be finite and > 0", self.alpha),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SirDerivative {
    pub ds: f64,
    pub di: f64,
    pub dr: f64,
}

pub fn sir_derivative(state: &SirState, params: &SirParams) -> Result<SirDerivative> {
    state.validate()?;
    params.validate()?;
    Ok(derivative_unchecked(state, params))
}

fn derivative_unchecked(state: &SirState, params: &SirParams) -> SirDerivative {
    let infection = params.beta * state.i * state.s;
    let recovery = params.alpha * state.i;
    SirDerivative {
        ds: -infection,
        di: infection - recovery,
        dr: recovery,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SirTrajectory {
    pub dt: f64,
    pub population: f64,
    /// `states[k]` is the state at time `k * dt`.
    pub states: Vec<SirState>,
    /// Indices of states produced by a step that undershot zero and was clamped.
    pub clamped_steps: Vec<usize>,
}

impl SirTrajectory {
    /// Index and value of the largest infected count; the first one on ties.
    pub fn peak_infected(&self) -> (usize, f64) {
        self.states.iter().enumerate().fold(
            (0, f64::NEG_INFINITY),
            |best, (k, st)| {
                if st.i > best.1 {
                    (k, st.i)
                } else {
                    best
                }
            },
        )
    }

    pub fn final_state(&self) -> SirState {
        *self.states.last().expect("trajectory always holds the initial state")
    }

    pub fn time_of(&self, index: usize) -> f64 {
        index as f64 * self.dt
    }

    /// First index whose susceptible count is at or below `level`.
    pub fn first_susceptible_at_or_below(&self, level: f64) -> Option<usize> {
        self.states.iter().position(|st| st.s <= level)
    }
}

/// Fixed-step forward Euler over `[0, horizon]`.
///
/// A step that drives a compartment below zero is clamped to zero and the
/// excess is taken from the largest compartment so the population is kept.
pub fn integrate_sir(initial: SirState, params: SirParams, horizon: f64, dt: f64) -> Result<SirTrajectory> {
    if !dt.is_finite() || dt <= 0.0 {
        return Err(Error::invalid("dt", format!("{dt} must be finite and > 0")));
    }
    if !horizon.is_finite() || horizon < dt {
        return Err(Error::invalid("horizon", format!("{horizon} must be finite and >= dt")));
    }
    initial.validate()?;
    params.validate()?;

    let n_steps = (horizon / dt + 1e-9).floor() as usize;
    let population = initial.population();
    let mut states = Vec::with_capacity(n_steps + 1);
    let mut clamped_steps = Vec::new();
    states.push(initial);

    let mut state = initial;
    for k in 1..=n_steps {
        let d = derivative_unchecked(&state, &params);
        let mut next = SirState {
            s: state.s + dt * d.ds,
            i: state.i + dt * d.di,
            r: state.r + dt * d.dr,
        };
        if !(next.s.is_finite() && next.i.is_finite() && next.r.is_finite()) {
            return Err(Error::IntegrationFailure { step: k });
        }
        if clamp_undershoot(&mut next) {
            clamped_steps.push(k);
        }
        states.push(next);
        state = next;
    }

    Ok(SirTrajectory {
        dt,
        population,
        states,
        clamped_steps,
    })
}

fn clamp_undershoot(state: &mut SirState) -> bool {
    let mut deficit = 0.0;
    for c in [&mut state.s, &mut state.i, &mut state.r] {
        if *c < 0.0 {
            deficit -= *c;
            *c = 0.0;
        }
    }
    if deficit == 0.0 {
        return false;
    }
    let largest = if state.s >= state.i && state.s >= state.r {
        &mut state.s
    } else if state.i >= state.r {
        &mut state.i
    } else {
        &mut state.r
    };
    *largest -= deficit;
    true
}

/// `beta = p_infection * contact_rate`.
pub fn beta_from_contact(p_infection: f64, contact_rate: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&p_infection) {
        return Err(Error::invalid("p_infection", format!("{p_infection} not in [0, 1]")));
    }
    if !contact_rate.is_finite() || contact_rate < 0.0 {
        return Err(Error::invalid("contact_rate", format!("{contact_rate} must be >= 0")));
    }
    Ok(p_infection * contact_rate)
}

/// `alpha = proportionality / t_recover`.
pub fn alpha_from_recovery(t_recover: f64, proportionality: f64) -> Result<f64> {
    if !t_recover.is_finite() || t_recover <= 0.0 {
        return Err(Error::invalid("t_recover", format!("{t_recover} must be > 0")));
    }
    if !proportionality.is_finite() || proportionality <= 0.0 {
        return Err(Error::invalid(
            "proportionality",
            format!("{proportionality} must be > 0"),
        ));
    }
    Ok(proportionality / t_recover)
}

#[cfg(test)]
mod tests {
    use approx::assert_abs_diff_eq;

    use super::*;

    fn reference() -> SirParams {
        SirParams::new(0.001, 0.025).unwrap()
    }

    #[test]
    fn derivative_hand_values() {
        let d = sir_derivative(&SirState::new(99.0, 1.0, 0.0).unwrap(), &reference()).unwrap();
        assert_abs_diff_eq!(d.ds, -0.099, epsilon = 1e-12);
        assert_abs_diff_eq!(d.di, 0.074, epsilon = 1e-12);
        assert_abs_diff_eq!(d.dr, 0.025, epsilon = 1e-12);

        let d = sir_derivative(&SirState::new(100.0, 0.0, 0.0).unwrap(), &reference()).unwrap();
        assert_eq!((d.ds, d.di, d.dr), (0.0, 0.0, 0.0));

        let d = sir_derivative(&SirState::new(0.0, 10.0, 90.0).unwrap(), &reference()).unwrap();
        assert_abs_diff_eq!(d.ds, 0.0);
        assert_abs_diff_eq!(d.di, -0.25, epsilon = 1e-12);
        assert_abs_diff_eq!(d.dr, 0.25, epsilon = 1e-12);
    }

    #[test]
    fn derivative_rejects_non_finite() {
        let bad = SirState {
            s: f64::NAN,
            i: 1.0,
            r: 0.0,
        };
        assert!(matches!(
            sir_derivative(&bad, &reference()),
            Err(Error::InvalidInput { field: "s", .. })
        ));
        let bad = SirParams {
            beta: f64::INFINITY,
            alpha: 0.1,
        };
        assert!(sir_derivative(&SirState::seeded(10.0), &bad).is_err());
    }

    #[test]
    fn single_euler_step() {
        let traj = integrate_sir(SirState::seeded(100.0), reference(), 1.0, 1.0).unwrap();
        assert_eq!(traj.states.len(), 2);
        let last = traj.final_state();
        assert_abs_diff_eq!(last.s, 98.901, epsilon = 1e-12);
        assert_abs_diff_eq!(last.i, 1.074, epsilon = 1e-12);
        assert_abs_diff_eq!(last.r, 0.025, epsilon = 1e-12);
    }

    #[test]
    fn disease_free_is_constant() {
        let init = SirState::new(100.0, 0.0, 0.0).unwrap();
        let traj = integrate_sir(init, reference(), 100.0, 1.0).unwrap();
        assert_eq!(traj.states.len(), 101);
        assert!(traj.states.iter().all(|s| *s == init));
    }

    // Frozen from an independent Python forward-Euler loop (dt = 1, 1000 steps).
    #[test]
    fn euler_reference_values() {
        let traj = integrate_sir(SirState::seeded(100.0), reference(), 1000.0, 1.0).unwrap();
        assert_eq!(traj.states.len(), 1001);
        let (k, peak) = traj.peak_infected();
        assert_eq!(k, 79);
        assert_abs_diff_eq!(peak, 41.099_455_525_832_45, epsilon = 1e-9);
        assert_eq!(traj.first_susceptible_at_or_below(25.0), Some(79));
        assert_abs_diff_eq!(traj.final_state().s, 1.851_477_376_633_020_6, epsilon = 1e-9);
        assert!(traj.clamped_steps.is_empty());
    }

    #[test]
    fn rejects_bad_step() {
        let init = SirState::seeded(100.0);
        assert!(matches!(
            integrate_sir(init, reference(), 10.0, 0.0),
            Err(Error::InvalidInput { field: "dt", .. })
        ));
        assert!(integrate_sir(init, reference(), 10.0, -1.0).is_err());
        assert!(integrate_sir(init, reference(), 0.5, 1.0).is_err());
    }

    #[test]
    fn overflow_reports_step() {
        let params = SirParams::new(1e300, 0.1).unwrap();
        let init = SirState::new(1e10, 1e10, 0.0).unwrap();
        assert!(matches!(
            integrate_sir(init, params, 10.0, 1.0),
            Err(Error::IntegrationFailure { step: 1 })
        ));
    }

    #[test]
    fn undershoot_is_clamped_and_flagged() {
        // alpha * dt > 1 drives I negative on the first step.
        let params = SirParams::new(0.0, 2.0).unwrap();
        let init = SirState::new(50.0, 10.0, 40.0).unwrap();
        let traj = integrate_sir(init, params, 1.0, 1.0).unwrap();
        let last = traj.final_state();
        assert_eq!(traj.clamped_steps, vec![1]);
        assert_eq!(last.i, 0.0);
        assert_abs_diff_eq!(last.population(), 100.0, epsilon = 1e-12);
        assert!(last.s >= 0.0 && last.r >= 0.0);
    }

    #[test]
    fn parameter_maps() {
        assert_eq!(beta_from_contact(1.0, 0.001).unwrap(), 0.001);
        assert_eq!(beta_from_contact(0.0, 123.0).unwrap(), 0.0);
        assert_abs_diff_eq!(beta_from_contact(0.5, 0.002).unwrap(), 0.001, epsilon = 1e-18);
        assert!(matches!(
            beta_from_contact(1.5, 0.001),
            Err(Error::InvalidInput {
                field: "p_infection",
                ..
            })
        ));

        assert_abs_diff_eq!(alpha_from_recovery(50.0, RECOVERY_CONSTANT).unwrap(), 0.025);
        assert_eq!(alpha_from_recovery(1.0, 1.0).unwrap(), 1.0);
        assert_abs_diff_eq!(alpha_from_recovery(100.0, 1.25).unwrap(), 0.0125);
        assert!(matches!(
            alpha_from_recovery(0.0, 1.25),
            Err(Error::InvalidInput { field: "t_recover", .. })
        ));
    }
}
