use std::io::Write;
use std::net::SocketAddr;
use std::path::PathBuf;
use std::process::ExitCode as ProcessExit;
use std::time::Duration;

use clap::{Parser, Subcommand};
use serde_json::json;
use swarmsir_cli::compare::{EnsembleStats, OdeSummary};
use swarmsir_cli::export::{write_csv, write_preamble};
use swarmsir_cli::{compare_ode_agents, export_trajectory, load_config, CliError, ExportFormat, ExportMeta, Scenario};
use swarmsir_core::score::score_trajectory;
use swarmsir_core::sir::integrate_sir;
use swarmsir_core::swarm::{ensemble_run, run};
use swarmsir_service::ServiceConfig;

#[derive(Parser)]
#[command(name = "swarmsir", version, about = "Swarm epidemic simulations and ODE references")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct ScenarioArgs {
    /// Scenario file (TOML); defaults apply without one.
    #[arg(long, short)]
    config: Option<PathBuf>,
    /// Overrides `sim.seed`.
    #[arg(long)]
    seed: Option<u64>,
}

impl ScenarioArgs {
    fn load(&self) -> Result<Scenario, CliError> {
        let mut scenario = match &self.config {
            Some(path) => load_config(path)?,
            None => Scenario::default(),
        };
        if let Some(seed) = self.seed {
            scenario.sim.seed = seed;
        }
        Ok(scenario)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Run one agent simulation and export its trajectory.
    Run {
        #[command(flatten)]
        scenario: ScenarioArgs,
        /// Output file; `.json` selects JSON, anything else CSV. Stdout CSV if omitted.
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
    /// Run an ensemble; prints summary statistics as JSON.
    Ensemble {
        #[command(flatten)]
        scenario: ScenarioArgs,
        /// Overrides `compare.n_runs`.
        #[arg(long)]
        runs: Option<usize>,
        /// Writes the per-step mean and std of S, I, R, V as CSV.
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
    /// Integrate the ODE reference; prints its summary as JSON.
    Ode {
        #[command(flatten)]
        scenario: ScenarioArgs,
        /// Writes `t,S,I,R` as CSV.
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
    /// Compare the ODE with the agent ensemble; exits 2 outside tolerance.
    Compare {
        #[command(flatten)]
        scenario: ScenarioArgs,
        #[arg(long)]
        runs: Option<usize>,
    },
    /// Run one game and print its score breakdown as JSON.
    Score {
        #[command(flatten)]
        scenario: ScenarioArgs,
    },
    /// Start the session service.
    Serve {
        #[arg(long, default_value = "127.0.0.1")]
        host: std::net::IpAddr,
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long, default_value_t = 64)]
        max_sessions: usize,
        /// Default frames per second for new sessions.
        #[arg(long, default_value_t = 20.0)]
        fps: f64,
        /// Seconds an unwatched session survives.
        #[arg(long, default_value_t = 120)]
        reap_after: u64,
    },
}

fn print_json(value: &impl serde::Serialize) -> Result<(), CliError> {
    let mut out = std::io::stdout().lock();
    serde_json::to_writer_pretty(&mut out, value).map_err(|e| CliError::io("<stdout>", e.into()))?;
    writeln!(out).map_err(|e| CliError::io("<stdout>", e))
}

fn write_file(path: &PathBuf, write: impl FnOnce(&mut dyn Write) -> std::io::Result<()>) -> Result<(), CliError> {
    let io = |e| CliError::io(path, e);
    let mut out = std::io::BufWriter::new(std::fs::File::create(path).map_err(io)?);
    write(&mut out).and_then(|()| out.flush()).map_err(io)
}

fn execute(command: Command) -> Result<(), CliError> {
    match command {
        Command::Run { scenario, out } => {
            let s = scenario.load()?;
            let traj = run(s.sim)?;
            match out {
                Some(path) => export_trajectory(&traj, &path, ExportFormat::from_path(&path)),
                None => write_csv(std::io::stdout().lock(), &traj).map_err(|e| CliError::io("<stdout>", e)),
            }
        }
        Command::Ensemble { scenario, runs, out } => {
            let s = scenario.load()?;
            let n = runs.unwrap_or(s.compare.n_runs);
            if n == 0 {
                return Err(CliError::Usage("--runs must be >= 1".into()));
            }
            let ens = ensemble_run(&s.sim, n)?;
            if let Some(path) = &out {
                write_file(path, |w| {
                    write_preamble(w, &ExportMeta::new(&s.sim))?;
                    writeln!(w, "step,S_mean,I_mean,R_mean,V_mean,S_std,I_std,R_std,V_std")?;
                    for (k, (m, sd)) in ens.mean.iter().zip(&ens.std).enumerate() {
                        writeln!(
                            w,
                            "{k},{},{},{},{},{},{},{},{}",
                            m[0], m[1], m[2], m[3], sd[0], sd[1], sd[2], sd[3]
                        )?;
                    }
                    Ok(())
                })?;
            }
            print_json(&json!({
                "config": s.sim,
                "summary": EnsembleStats::of(&ens, s.sim.seed, s.compare.smoothing_half_window),
                "runs": ens.runs,
            }))
        }
        Command::Ode { scenario, out } => {
            let s = scenario.load()?;
            let o = s.ode;
            let traj = integrate_sir(o.initial, o.params, o.horizon, o.dt)?;
            if let Some(path) = &out {
                write_file(path, |w| {
                    writeln!(w, "# swarmsir {}", swarmsir_cli::VERSION)?;
                    writeln!(w, "# ode {}", serde_json::to_string(&o).expect("serializable"))?;
                    writeln!(w, "t,S,I,R")?;
                    for (k, st) in traj.states.iter().enumerate() {
                        writeln!(w, "{},{},{},{}", traj.time_of(k), st.s, st.i, st.r)?;
                    }
                    Ok(())
                })?;
            }
            print_json(&json!({
                "ode": o,
                "summary": OdeSummary::of(&traj),
                "clamped_steps": traj.clamped_steps.len(),
            }))
        }
        Command::Compare { scenario, runs } => {
            let mut s = scenario.load()?;
            if let Some(n) = runs {
                if n == 0 {
                    return Err(CliError::Usage("--runs must be >= 1".into()));
                }
                s.compare.n_runs = n;
            }
            let report = compare_ode_agents(&s)?;
            print_json(&report)?;
            report.into_result().map(|_| ())
        }
        Command::Score { scenario } => {
            let s = scenario.load()?;
            let traj = run(s.sim.clone())?;
            print_json(&json!({
                "config": s.sim,
                "peak_infected": traj.peak_infected,
                "total_control_deviation": traj.total_control_deviation,
                "breakdown": score_trajectory(&traj),
            }))
        }
        Command::Serve {
            host,
            port,
            max_sessions,
            fps,
            reap_after,
        } => {
            if !(fps.is_finite() && fps > 0.0) {
                return Err(CliError::Usage(format!("--fps {fps} must be > 0")));
            }
            if max_sessions == 0 {
                return Err(CliError::Usage("--max-sessions must be >= 1".into()));
            }
            tracing_subscriber::fmt().with_writer(std::io::stderr).init();
            let config = ServiceConfig {
                addr: SocketAddr::new(host, port),
                max_sessions,
                default_fps: fps,
                reap_after: Duration::from_secs(reap_after),
                ..ServiceConfig::default()
            };
            let rt = tokio::runtime::Runtime::new().map_err(|e| CliError::io("<runtime>", e))?;
            rt.block_on(async {
                let listener = tokio::net::TcpListener::bind(config.addr)
                    .await
                    .map_err(|e| CliError::io(config.addr.to_string(), e))?;
                eprintln!(
                    "listening on http://{}",
                    listener.local_addr().map_err(|e| CliError::io("<socket>", e))?
                );
                swarmsir_service::serve(listener, config)
                    .await
                    .map_err(|e| CliError::io("<server>", e))
            })
        }
    }
}

fn main() -> ProcessExit {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            // --help and --version
            let _ = e.print();
            return ProcessExit::SUCCESS;
        }
        Err(e) => {
            let err = CliError::Usage(e.render().to_string().trim_end().to_string());
            eprintln!("{}", err.to_json_line());
            return ProcessExit::from(err.exit_code() as u8);
        }
    };
    match execute(cli.command) {
        Ok(()) => ProcessExit::SUCCESS,
        // A closed pipe (`swarmsir ode | head`) is not a failure.
        Err(CliError::Io { source, .. }) if source.kind() == std::io::ErrorKind::BrokenPipe => ProcessExit::SUCCESS,
        Err(err) => {
            eprintln!("{}", err.to_json_line());
            ProcessExit::from(err.exit_code() as u8)
        }
    }
}
