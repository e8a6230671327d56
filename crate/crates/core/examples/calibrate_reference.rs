//! Sweeps the random-walk speed (and patient-zero count) of the reference
//! swarm configuration and compares 50-run ensemble means against the
//! dt = 1 ODE reference.
//!
//! ```text
//! cargo run --release -p swarmsir-core --example calibrate_reference -- [v_max ...]
//! INITIAL_INFECTED=1,2 cargo run --release -p swarmsir-core --example calibrate_reference
//! ```

use swarmsir_core::sir::{integrate_sir, SirParams, SirState};
use swarmsir_core::swarm::{ensemble_run, is_unimodal, SimConfig};

fn main() {
    let ode = integrate_sir(
        SirState::seeded(100.0),
        SirParams::new(0.001, 0.025).unwrap(),
        1000.0,
        1.0,
    )
    .unwrap();
    let (_, ode_peak) = ode.peak_infected();
    let ode_final_s = ode.final_state().s;
    println!("ode: peak {ode_peak:.3} final_s {ode_final_s:.3}");

    let speeds: Vec<f64> = std::env::args()
        .skip(1)
        .map(|a| a.parse().expect("v_max must be a number"))
        .collect();
    let speeds = if speeds.is_empty() {
        vec![0.10, 0.12, 0.14, 0.16, 0.18, 0.20, 0.25]
    } else {
        speeds
    };
    let seeded: Vec<usize> = std::env::var("INITIAL_INFECTED")
        .map(|v| v.split(',').map(|s| s.parse().unwrap()).collect())
        .unwrap_or_else(|_| vec![1, 2, 3]);

    println!(
        "initial_infected,v_max,mean_peak,peak_rel_err,mean_final_s,final_s_rel_err,fadeouts,max_final_i,unimodal"
    );
    for &initial_infected in &seeded {
        for &v_max in &speeds {
            let config = SimConfig {
                v_max,
                initial_infected,
                seed: 0,
                ..SimConfig::default()
            };
            let ens = ensemble_run(&config, 50).unwrap();
            let (peak, _) = ens.peak_infected();
            let (final_s, _) = ens.final_susceptible();
            let fadeouts = ens.runs.iter().filter(|r| r.final_counts.s > 50).count();
            let max_final_i = ens.runs.iter().map(|r| r.final_counts.i).max().unwrap();
            let unimodal = is_unimodal(&ens.mean_infected(), 2);
            println!(
                "{initial_infected},{v_max},{peak:.3},{:.3},{final_s:.3},{:.3},{fadeouts},{max_final_i},{unimodal}",
                (peak - ode_peak).abs() / ode_peak.max(1.0),
                (final_s - ode_final_s).abs() / ode_final_s.max(1.0),
            );
        }
    }
}
