use std::collections::hash_map::{Entry, HashMap};

use serde::{Deserialize, Serialize};

use super::config::{DeviationNorm, SimConfig};
use crate::error::{Error, Result};
use crate::frame::{AgentSnapshot, Counts, FilterStatus, HealthTag, SimFrame};
use crate::rng::SimRng;
use crate::safety::{assemble_qp, solve_or_fallback, BarrierSpec, QpOptions, QpStatus};
use crate::spatial::contacts_within;
use crate::vec2::Vec2;

/// Distance by which a coincident agent is displaced before filtering.
pub const COINCIDENCE_JITTER: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum HealthState {
    Susceptible,
    Infected { since_step: u64 },
    Recovered,
    Vaccinated,
}

impl HealthState {
    pub fn is_infected(self) -> bool {
        matches!(self, HealthState::Infected { .. })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Agent {
    pub id: usize,
    pub position: Vec2,
    pub health: HealthState,
    /// Current random-walk target.
    pub waypoint: Vec2,
    pub last_nominal: Vec2,
    pub last_applied: Vec2,
}

/// Safety-filter bookkeeping for the most recent step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FilterOutcome {
    pub status: FilterStatus,
    /// The nominal velocities already satisfied every barrier row.
    pub nominal_feasible: bool,
    pub active_constraints: usize,
    pub iterations: usize,
}

#[derive(Debug, Clone)]
pub struct World {
    pub config: SimConfig,
    pub agents: Vec<Agent>,
    step: u64,
    rng: SimRng,
    /// Contact pairs seen at the previous step, ascending.
    prev_contacts: Vec<(usize, usize)>,
    last_filter: FilterOutcome,
}

/// Random-walk command: steer proportionally toward the waypoint, capped at
/// `v_max`. A waypoint within tolerance is replaced first.
pub fn nominal_control(agent: &mut Agent, config: &SimConfig, rng: &mut SimRng) -> Vec2 {
    if (agent.waypoint - agent.position).norm() <= config.waypoint_tolerance {
        agent.waypoint = rng.point_in(config.arena_width, config.arena_height);
    }
    (agent.waypoint - agent.position).clip_norm(config.v_max)
}

fn clamp_to_arena(p: Vec2, config: &SimConfig) -> Vec2 {
    Vec2::new(p.x.clamp(0.0, config.arena_width), p.y.clamp(0.0, config.arena_height))
}

fn place_agents(config: &SimConfig, rng: &mut SimRng) -> Result<Vec<Vec2>> {
    let n = config.n_agents;
    let min_sep = config.d_thresh.max(config.d_social);
    let min_sep2 = min_sep * min_sep;
    let max_attempts = 10 * (n as u64) * (n as u64);
    let mut placed: Vec<Vec2> = Vec::with_capacity(n);
    let mut attempts = 0u64;
    while placed.len() < n {
        if attempts >= max_attempts {
            return Err(Error::OvercrowdedArena {
                placed: placed.len(),
                requested: n,
                attempts,
            });
        }
        attempts += 1;
        let candidate = rng.point_in(config.arena_width, config.arena_height);
        if placed.iter().all(|&p| (p - candidate).norm_squared() >= min_sep2) {
            placed.push(candidate);
        }
    }
    Ok(placed)
}

impl World {
    /// Seeded initial placement and health assignment.
    ///
    /// Draw order: positions (rejection sampled against the larger of the
    /// two distances), a shuffle of the ids, then one waypoint per agent.
    pub fn new(config: SimConfig) -> Result<World> {
        config.validate()?;
        let mut rng = SimRng::new(config.seed);
        let positions = place_agents(&config, &mut rng)?;

        let n = config.n_agents;
        let mut order: Vec<usize> = (0..n).collect();
        rng.shuffle(&mut order);
        let mut health = vec![HealthState::Susceptible; n];
        let n_infected = config.initial_infected;
        for &id in &order[..n_infected] {
            health[id] = HealthState::Infected { since_step: 0 };
        }
        for &id in &order[n_infected..n_infected + config.n_vaccinated()] {
            health[id] = HealthState::Vaccinated;
        }

        let agents = positions
            .into_iter()
            .zip(health)
            .enumerate()
            .map(|(id, (position, health))| Agent {
                id,
                position,
                health,
                waypoint: rng.point_in(config.arena_width, config.arena_height),
                last_nominal: Vec2::ZERO,
                last_applied: Vec2::ZERO,
            })
            .collect();

        Ok(World {
            config,
            agents,
            step: 0,
            rng,
            prev_contacts: Vec::new(),
            last_filter: FilterOutcome {
                status: FilterStatus::Disabled,
                nominal_feasible: true,
                active_constraints: 0,
                iterations: 0,
            },
        })
    }

    pub fn current_step(&self) -> u64 {
        self.step
    }

    pub fn last_filter(&self) -> FilterOutcome {
        self.last_filter
    }

    pub fn positions(&self) -> Vec<Vec2> {
        self.agents.iter().map(|a| a.position).collect()
    }

    pub fn counts(&self) -> Counts {
        Counts::tally(self.agents.iter().map(|a| HealthTag::from(a.health)))
    }

    /// Snapshot of the current state with the given control activity.
    pub fn frame(&self, active_constraints: usize, control_deviation: f64) -> SimFrame {
        SimFrame {
            step: self.step,
            agents: self
                .agents
                .iter()
                .map(|a| AgentSnapshot {
                    id: a.id,
                    x: a.position.x,
                    y: a.position.y,
                    state: a.health.into(),
                })
                .collect(),
            counts: self.counts(),
            active_constraints,
            control_deviation,
            filter: self.last_filter.status,
        }
    }

    pub fn detect_contacts(&self) -> Vec<(usize, usize)> {
        contacts_within(
            &self.positions(),
            self.config.d_thresh,
            self.config.arena_width,
            self.config.arena_height,
        )
    }

    /// Edge-triggered transmission over this step's contact set.
    ///
    /// Only pairs absent from the previous step's set are considered. Each
    /// onset pair with an agent infected before this phase and a still
    /// susceptible partner consumes one Bernoulli draw, in ascending pair order.
    pub fn apply_transmission(&mut self, contacts: &[(usize, usize)]) -> Vec<usize> {
        let infectious: Vec<bool> = self.agents.iter().map(|a| a.health.is_infected()).collect();
        let p = self.config.p_infection;
        let mut newly = Vec::new();
        for &(i, j) in contacts {
            if self.prev_contacts.binary_search(&(i, j)).is_ok() {
                continue;
            }
            let target = match (infectious[i], infectious[j]) {
                (true, false) => j,
                (false, true) => i,
                _ => continue,
            };
            if self.agents[target].health != HealthState::Susceptible {
                continue;
            }
            if self.rng.bernoulli(p) {
                self.agents[target].health = HealthState::Infected { since_step: self.step };
                newly.push(target);
            }
        }
        self.prev_contacts = contacts.to_vec();
        newly
    }

    /// Agents infected for at least `t_recover` steps recover. Agents
    /// infected during the current step are never eligible, so with
    /// `t_recover = 0` they recover on the following step.
    pub fn apply_recovery(&mut self) -> Vec<usize> {
        let now = self.step;
        let t_recover = u64::from(self.config.t_recover);
        let mut recovered = Vec::new();
        for agent in &mut self.agents {
            if let HealthState::Infected { since_step } = agent.health {
                if since_step < now && now - since_step >= t_recover {
                    agent.health = HealthState::Recovered;
                    recovered.push(agent.id);
                }
            }
        }
        recovered
    }

    /// Positions used for the barrier rows, with exact duplicates nudged
    /// apart by [`COINCIDENCE_JITTER`] in a seeded direction.
    fn filter_positions(&mut self) -> Vec<Vec2> {
        let mut positions = self.positions();
        let mut seen: HashMap<(u64, u64), usize> = HashMap::with_capacity(positions.len());
        for (id, p) in positions.iter_mut().enumerate() {
            while let Entry::Occupied(_) = seen.entry((p.x.to_bits(), p.y.to_bits())) {
                *p += self.rng.direction() * COINCIDENCE_JITTER;
            }
            seen.insert((p.x.to_bits(), p.y.to_bits()), id);
        }
        positions
    }

    /// Advances one step: nominal control, safety filter, motion, contacts,
    /// transmission, recovery. Returns the resulting frame.
    pub fn step(&mut self) -> Result<SimFrame> {
        self.step += 1;
        let config = self.config.clone();

        let mut nominal = Vec::with_capacity(self.agents.len());
        for agent in &mut self.agents {
            let u = nominal_control(agent, &config, &mut self.rng);
            agent.last_nominal = u;
            nominal.push(u);
        }

        let (filtered, outcome) = if config.d_social > 0.0 {
            let spec = BarrierSpec::new(config.d_social, config.gamma)?;
            let positions = self.filter_positions();
            let problem = assemble_qp(&positions, &nominal, &spec)?;
            let solution = solve_or_fallback(&problem, QpOptions::with_tolerance(config.qp_tolerance))?;
            let outcome = FilterOutcome {
                status: match solution.status {
                    QpStatus::Optimal => FilterStatus::Optimal,
                    QpStatus::Fallback => FilterStatus::Fallback,
                },
                nominal_feasible: problem.is_feasible(&nominal),
                active_constraints: solution.active_count,
                iterations: solution.iterations,
            };
            (solution.velocities, outcome)
        } else {
            let outcome = FilterOutcome {
                status: FilterStatus::Disabled,
                nominal_feasible: true,
                active_constraints: 0,
                iterations: 0,
            };
            (nominal.clone(), outcome)
        };
        self.last_filter = outcome;

        let mut sq_sum = 0.0;
        let mut norm_sum = 0.0;
        for ((agent, &u), &u_hat) in self.agents.iter_mut().zip(&filtered).zip(&nominal) {
            // The nominal is already capped; re-clipping it would only add rounding.
            let applied = if u == u_hat { u } else { u.clip_norm(config.v_max) };
            agent.last_applied = applied;
            agent.position = clamp_to_arena(agent.position + applied, &config);
            let dev = applied - u_hat;
            sq_sum += dev.norm_squared();
            norm_sum += dev.norm();
        }
        let deviation = match config.deviation_norm {
            DeviationNorm::Stacked => sq_sum.sqrt(),
            DeviationNorm::PerAgentSum => norm_sum,
        };

        let contacts = self.detect_contacts();
        self.apply_transmission(&contacts);
        self.apply_recovery();

        Ok(self.frame(outcome.active_constraints, deviation))
    }
}
