use proptest::prelude::*;
use swarmsir_core::rng::SimRng;
use swarmsir_core::swarm::{ensemble_run, nominal_control, run, HealthState, SimConfig, World};
use swarmsir_core::{Counts, Error, FilterStatus, HealthTag, Vec2};

fn reference() -> SimConfig {
    SimConfig {
        v_max: 0.155,
        ..SimConfig::default()
    }
}

#[test]
fn init_counts_and_spacing() {
    let world = World::new(SimConfig {
        seed: 42,
        ..SimConfig::default()
    })
    .unwrap();
    assert_eq!(
        world.counts(),
        Counts {
            s: 99,
            i: 1,
            r: 0,
            v: 0
        }
    );
    let pos = world.positions();
    for i in 0..pos.len() {
        assert!(pos[i].x >= 0.0 && pos[i].x <= 10.0 && pos[i].y >= 0.0 && pos[i].y <= 10.0);
        for j in i + 1..pos.len() {
            assert!((pos[i] - pos[j]).norm() >= 0.2);
        }
    }

    let single = World::new(SimConfig {
        n_agents: 1,
        initial_infected: 0,
        ..SimConfig::default()
    })
    .unwrap();
    assert_eq!(single.counts(), Counts { s: 1, i: 0, r: 0, v: 0 });

    let vax = World::new(SimConfig {
        vaccinated_fraction: 0.25,
        initial_infected: 3,
        ..SimConfig::default()
    })
    .unwrap();
    assert_eq!(
        vax.counts(),
        Counts {
            s: 72,
            i: 3,
            r: 0,
            v: 25
        }
    );
}

#[test]
fn init_is_deterministic() {
    let cfg = SimConfig {
        seed: 42,
        d_social: 0.3,
        ..SimConfig::default()
    };
    let a = World::new(cfg.clone()).unwrap();
    let b = World::new(cfg).unwrap();
    assert_eq!(a.agents, b.agents);
    let c = World::new(SimConfig {
        seed: 43,
        ..SimConfig::default()
    })
    .unwrap();
    assert_ne!(a.agents, c.agents);
}

#[test]
fn overcrowded_arena_is_reported() {
    let cfg = SimConfig {
        n_agents: 100,
        arena_width: 2.0,
        arena_height: 2.0,
        d_social: 1.0,
        ..SimConfig::default()
    };
    assert!(matches!(
        World::new(cfg),
        Err(Error::OvercrowdedArena { requested: 100, .. })
    ));
}

fn lone_agent(position: Vec2, waypoint: Vec2) -> (World, SimConfig) {
    let cfg = SimConfig {
        n_agents: 1,
        initial_infected: 0,
        ..SimConfig::default()
    };
    let mut world = World::new(cfg.clone()).unwrap();
    world.agents[0].position = position;
    world.agents[0].waypoint = waypoint;
    (world, cfg)
}

#[test]
fn nominal_control_examples() {
    let mut rng = SimRng::new(0);
    let (mut world, cfg) = lone_agent(Vec2::ZERO, Vec2::new(10.0, 0.0));
    let u = nominal_control(&mut world.agents[0], &cfg, &mut rng);
    assert!((u - Vec2::new(0.1, 0.0)).norm() < 1e-15);

    let cfg = SimConfig {
        waypoint_tolerance: 0.01,
        ..cfg
    };
    let (mut world, _) = lone_agent(Vec2::new(5.0, 5.0), Vec2::new(5.0, 5.05));
    let u = nominal_control(&mut world.agents[0], &cfg, &mut rng);
    assert!((u - Vec2::new(0.0, 0.05)).norm() < 1e-12);

    let (mut world, cfg) = lone_agent(Vec2::new(3.0, 3.0), Vec2::new(3.0, 3.0));
    let u = nominal_control(&mut world.agents[0], &cfg, &mut rng);
    let agent = &world.agents[0];
    assert_ne!(agent.waypoint, Vec2::new(3.0, 3.0));
    let toward = agent.waypoint - agent.position;
    assert!(u.norm() <= cfg.v_max + 1e-15);
    assert!((u.x * toward.y - u.y * toward.x).abs() < 1e-9 && u.dot(toward) > 0.0);
}

fn pair_world(distance: f64, a: HealthState, b: HealthState, p_infection: f64, seed: u64) -> World {
    let cfg = SimConfig {
        n_agents: 2,
        initial_infected: 0,
        p_infection,
        seed,
        ..SimConfig::default()
    };
    let mut world = World::new(cfg).unwrap();
    world.agents[0].position = Vec2::new(5.0, 5.0);
    world.agents[1].position = Vec2::new(5.0 + distance, 5.0);
    world.agents[0].health = a;
    world.agents[1].health = b;
    world
}

const INF: HealthState = HealthState::Infected { since_step: 0 };

#[test]
fn contact_threshold_is_strict() {
    let w = pair_world(0.19, INF, HealthState::Susceptible, 1.0, 0);
    assert_eq!(w.detect_contacts(), vec![(0, 1)]);
    let mut w = pair_world(0.0, INF, HealthState::Susceptible, 1.0, 0);
    w.agents[1].position = Vec2::new(5.0, 5.25);
    w.config.d_thresh = 0.25;
    assert!(w.detect_contacts().is_empty());
}

#[test]
fn transmission_rules() {
    let mut w = pair_world(0.1, INF, HealthState::Susceptible, 1.0, 0);
    let contacts = w.detect_contacts();
    assert_eq!(w.apply_transmission(&contacts), vec![1]);

    for immune in [HealthState::Vaccinated, HealthState::Recovered] {
        let mut w = pair_world(0.1, INF, immune, 1.0, 0);
        let contacts = w.detect_contacts();
        assert!(w.apply_transmission(&contacts).is_empty());
        assert_eq!(w.agents[1].health, immune);
    }
}

#[test]
fn transmission_is_edge_triggered() {
    let trials = 10_000;
    let mut infected = 0;
    for seed in 0..trials {
        let mut w = pair_world(0.1, INF, HealthState::Susceptible, 0.5, seed);
        let contacts = w.detect_contacts();
        for _ in 0..10 {
            if !w.apply_transmission(&contacts).is_empty() {
                infected += 1;
            }
        }
    }
    let rate = infected as f64 / trials as f64;
    assert!((rate - 0.5).abs() <= 0.02, "rate {rate}");
}

#[test]
fn newly_infected_do_not_transmit_same_step() {
    // 0 infected, 1 and 2 susceptible; 0-1 and 1-2 in contact, 0-2 not.
    let cfg = SimConfig {
        n_agents: 3,
        initial_infected: 0,
        ..SimConfig::default()
    };
    let mut w = World::new(cfg).unwrap();
    w.agents[0].position = Vec2::new(5.0, 5.0);
    w.agents[1].position = Vec2::new(5.15, 5.0);
    w.agents[2].position = Vec2::new(5.3, 5.0);
    w.agents[0].health = INF;
    let contacts = w.detect_contacts();
    assert_eq!(contacts, vec![(0, 1), (1, 2)]);
    assert_eq!(w.apply_transmission(&contacts), vec![1]);
    assert_eq!(w.agents[2].health, HealthState::Susceptible);
}

#[test]
fn recovery_timing() {
    let cfg = SimConfig {
        p_infection: 0.0,
        t_max: 60,
        ..reference()
    };
    let traj = run(cfg).unwrap();
    assert_eq!(traj.peak_infected, 1);
    let first_zero = traj.frames.iter().position(|f| f.counts.i == 0).unwrap();
    assert_eq!(first_zero, 50);
    assert_eq!(traj.frames[49].counts.i, 1);
    assert_eq!(
        traj.final_counts(),
        Counts {
            s: 99,
            i: 0,
            r: 1,
            v: 0
        }
    );
}

#[test]
fn zero_recovery_time_still_transmits_once() {
    // Patient zero is in contact with a fresh partner at the first step.
    let cfg = SimConfig {
        n_agents: 2,
        initial_infected: 0,
        t_recover: 0,
        ..SimConfig::default()
    };
    let mut w = World::new(cfg).unwrap();
    w.agents[0].health = INF;
    w.agents[0].position = Vec2::new(5.0, 5.0);
    w.agents[1].position = Vec2::new(5.25, 5.0);
    w.agents[0].waypoint = Vec2::new(9.0, 5.0);
    w.agents[1].waypoint = Vec2::new(5.1, 5.0);
    let frame = w.step().unwrap();
    assert_eq!(w.agents[0].health, HealthState::Recovered);
    assert_eq!(w.agents[1].health, HealthState::Infected { since_step: 1 });
    assert_eq!(frame.counts, Counts { s: 0, i: 1, r: 1, v: 0 });
    w.step().unwrap();
    assert_eq!(w.agents[1].health, HealthState::Recovered);
}

#[test]
fn disease_free_world_only_moves() {
    let cfg = SimConfig {
        initial_infected: 0,
        ..SimConfig::default()
    };
    let mut w = World::new(cfg).unwrap();
    let before = w.positions();
    let frame = w.step().unwrap();
    assert_eq!(
        frame.counts,
        Counts {
            s: 100,
            i: 0,
            r: 0,
            v: 0
        }
    );
    assert_ne!(before, w.positions());
}

#[test]
fn disabled_filter_has_zero_deviation() {
    let traj = run(SimConfig { t_max: 200, ..reference() }).unwrap();
    assert!(traj
        .frames
        .iter()
        .all(|f| f.control_deviation == 0.0 && f.filter == FilterStatus::Disabled));
    assert_eq!(traj.total_control_deviation, 0.0);
}

#[test]
fn reference_run_reaches_extinction() {
    let traj = run(reference()).unwrap();
    assert_eq!(traj.frames.len(), 1001);
    let end = traj.final_counts();
    assert_eq!(end.i, 0);
    assert_eq!(end.v, 0);
    assert_eq!(end.s + end.r, 100);
    assert!(traj.peak_infected > 10);
}

#[test]
fn runs_are_reproducible() {
    let cfg = SimConfig {
        d_social: 0.3,
        t_max: 150,
        seed: 5,
        ..SimConfig::default()
    };
    assert_eq!(run(cfg.clone()).unwrap(), run(cfg).unwrap());
}

#[test]
fn frames_padded_after_extinction() {
    let cfg = SimConfig {
        p_infection: 0.0,
        t_recover: 5,
        t_max: 30,
        ..SimConfig::default()
    };
    let traj = run(cfg).unwrap();
    assert_eq!(traj.frames.len(), 31);
    let terminal = &traj.frames[5];
    assert_eq!(terminal.counts.i, 0);
    for (k, f) in traj.frames.iter().enumerate().skip(6) {
        assert_eq!(f.step, k as u64);
        assert_eq!(f.agents, terminal.agents);
        assert_eq!(f.control_deviation, 0.0);
    }
}

#[test]
fn ensemble_statistics() {
    let cfg = SimConfig { t_max: 120, ..reference() };
    let one = ensemble_run(&cfg, 1).unwrap();
    let traj = run(cfg.clone()).unwrap();
    for (m, c) in one.mean.iter().zip(traj.counts()) {
        assert_eq!(*m, c.as_array().map(|x| x as f64));
    }
    assert!(one.std.iter().all(|s| *s == [0.0; 4]));

    let quiet = SimConfig {
        p_infection: 0.0,
        ..cfg.clone()
    };
    let ens = ensemble_run(&quiet, 8).unwrap();
    assert!(ens.std.iter().all(|s| s[1] == 0.0));
    assert_eq!(
        ens.runs.iter().map(|r| r.seed).collect::<Vec<_>>(),
        (0..8).collect::<Vec<_>>()
    );

    assert!(matches!(
        ensemble_run(&cfg, 0),
        Err(Error::InvalidInput { field: "n_runs", .. })
    ));
    let broken = SimConfig {
        n_agents: 100,
        arena_width: 1.0,
        arena_height: 1.0,
        d_thresh: 0.5,
        ..cfg
    };
    assert!(matches!(ensemble_run(&broken, 3), Err(Error::Run { .. })));
}

fn random_config() -> impl Strategy<Value = SimConfig> {
    (
        2usize..40,
        0.0f64..=1.0,
        0u32..40,
        prop::sample::select(vec![0.0, 0.0, 0.3, 0.6]),
        0.0f64..0.3,
        0.05f64..0.3,
        any::<u64>(),
    )
        .prop_map(|(n, p, t_recover, d_social, vax, v_max, seed)| SimConfig {
            n_agents: n,
            arena_width: 6.0,
            arena_height: 4.0,
            p_infection: p,
            t_recover,
            d_thresh: 0.3,
            d_social,
            v_max,
            initial_infected: 1,
            vaccinated_fraction: vax,
            t_max: 120,
            seed,
            ..SimConfig::default()
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn trajectory_invariants(cfg in random_config()) {
        let traj = run(cfg.clone()).unwrap();
        prop_assert_eq!(traj.frames.len() as u64, cfg.t_max + 1);
        let mut prev: Option<&swarmsir_core::SimFrame> = None;
        for f in &traj.frames {
            prop_assert_eq!(f.counts.total(), cfg.n_agents);
            for a in &f.agents {
                prop_assert!(a.x >= 0.0 && a.x <= cfg.arena_width && a.y >= 0.0 && a.y <= cfg.arena_height);
            }
            if let Some(p) = prev {
                prop_assert!(f.counts.s + f.counts.v <= p.counts.s + p.counts.v);
                prop_assert!(f.counts.r >= p.counts.r);
                prop_assert_eq!(f.counts.v, p.counts.v);
                for (a, b) in p.agents.iter().zip(&f.agents) {
                    let moved = Vec2::new(b.x - a.x, b.y - a.y).norm();
                    prop_assert!(moved <= cfg.v_max + 1e-12);
                    if matches!(a.state, HealthTag::R | HealthTag::V) {
                        prop_assert_eq!(a.state, b.state);
                    }
                }
            }
            prev = Some(f);
        }
        prop_assert_eq!(traj.peak_infected, traj.frames.iter().map(|f| f.counts.i).max().unwrap());
    }
}
