//! Command-line front end: validate scenarios, plan missions, fly them in
//! simulation and render report figures.
//!
//! Exit codes: 0 success, 2 scenario validation/parse failure, 3 planner
//! found no path, 4 simulation abort, 1 anything else.

use clap::{Parser, Subcommand};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use triswarm_core::planner::PlannerError;
use triswarm_core::scenario::{load_plan, load_scenario, save_plan, Scenario, ScenarioError};
use triswarm_core::sim::{audit, SimFailure, SimLog};
use triswarm_core::{figures, LeaderPlan};

#[derive(Parser)]
#[command(name = "triswarm", about = "Leader-triangle swarm mission tool", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check a scenario file and print what is wrong with it.
    Validate {
        #[arg(long)]
        scenario: PathBuf,
    },
    /// Plan the leading-triangle path and write plan.json plus a path figure.
    Plan {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long, default_value = "out")]
        out_dir: PathBuf,
    },
    /// Fly a plan in closed loop; writes CSV logs and prints the audit.
    Simulate {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        plan: PathBuf,
        #[arg(long, default_value = "out")]
        out_dir: PathBuf,
        /// Overrides the scenario's simulation seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Simulate and render the full figure set (paths, eigenvalues, snapshots).
    Report {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        plan: PathBuf,
        #[arg(long, default_value = "out")]
        out_dir: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
    },
}

enum CliError {
    Scenario(ScenarioError),
    Planner(PlannerError),
    Sim(Box<SimFailure>),
    Io(std::io::Error),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Scenario(_) => 2,
            CliError::Planner(PlannerError::NoPath { .. }) => 3,
            CliError::Planner(_) => 1,
            CliError::Sim(_) => 4,
            CliError::Io(_) => 1,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Scenario(e) => write!(f, "{e}"),
            CliError::Planner(e) => write!(f, "planning failed: {e}"),
            CliError::Sim(e) => write!(f, "{e}"),
            CliError::Io(e) => write!(f, "io error: {e}"),
        }
    }
}

impl From<ScenarioError> for CliError {
    fn from(e: ScenarioError) -> Self {
        CliError::Scenario(e)
    }
}

impl From<PlannerError> for CliError {
    fn from(e: PlannerError) -> Self {
        CliError::Planner(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn run(command: Command) -> Result<(), CliError> {
    match command {
        Command::Validate { scenario } => {
            let sc = load_scenario(&scenario)?;
            let margins = sc.margins().map_err(|e| {
                CliError::Scenario(ScenarioError::Validation {
                    violations: vec![e.to_string()],
                })
            })?;
            println!("scenario `{}` is valid", sc.name);
            println!(
                "  {} vehicles, epsilon {} m, delta {} m",
                3 + sc.followers.len(),
                sc.epsilon,
                sc.delta
            );
            println!(
                "  margins: d_s {:.3} m, d_b {:.3} m, delta_max {:.3} m, lambda_cd_min {:.4}",
                margins.d_s, margins.d_b, margins.delta_max, margins.lambda_cd_min
            );
            Ok(())
        }
        Command::Plan { scenario, out_dir } => {
            let sc = load_scenario(&scenario)?;
            std::fs::create_dir_all(&out_dir)?;
            let plan = sc.plan()?;
            println!(
                "plan: {} waypoints, horizon {:.0} s, cost {:.3}, {} expansions",
                plan.waypoints.len(),
                plan.horizon(),
                plan.cost,
                plan.expansions
            );
            save_plan(&out_dir.join("plan.json"), &sc.name, &plan)?;
            std::fs::write(
                out_dir.join("plan_paths.svg"),
                figures::plan_figure_svg(&sc.environment, &plan, &sc.followers),
            )?;
            println!("wrote {}", out_dir.join("plan.json").display());
            Ok(())
        }
        Command::Simulate {
            scenario,
            plan,
            out_dir,
            seed,
        } => {
            let sc = load_scenario(&scenario)?;
            let plan = load_plan(&plan)?;
            let log = simulate(&sc, &plan, seed, &out_dir)?;
            print!("{}", audit(&log, &sc.margins().expect("validated")));
            Ok(())
        }
        Command::Report {
            scenario,
            plan,
            out_dir,
            seed,
        } => {
            let sc = load_scenario(&scenario)?;
            let plan = load_plan(&plan)?;
            let log = simulate(&sc, &plan, seed, &out_dir)?;
            let report = audit(&log, &sc.margins().expect("validated"));
            print!("{report}");
            render_figures(&sc, &plan, &log, &out_dir)?;
            Ok(())
        }
    }
}

fn simulate(
    sc: &Scenario,
    plan: &LeaderPlan,
    seed: Option<u64>,
    out_dir: &Path,
) -> Result<SimLog, CliError> {
    std::fs::create_dir_all(out_dir)?;
    let log = sc.simulate(plan, seed).map_err(Box::new).map_err(CliError::Sim)?;
    log.write_csv(out_dir)?;
    Ok(log)
}

fn render_figures(
    sc: &Scenario,
    plan: &LeaderPlan,
    log: &SimLog,
    out_dir: &Path,
) -> Result<(), CliError> {
    std::fs::write(
        out_dir.join("plan_paths.svg"),
        figures::plan_figure_svg(&sc.environment, plan, &sc.followers),
    )?;

    let margins = sc.margins().expect("validated");
    let traj = sc.trajectory(plan);
    let series = traj.deformation_series(sc.sim.step, margins.lambda_cd_min);
    std::fs::write(
        out_dir.join("eigenvalues.svg"),
        figures::eigenvalue_plot_svg(&series, margins.lambda_cd_min),
    )?;

    // Nine evenly spaced snapshots across the simulated span.
    let t_end = log.times.last().copied().unwrap_or(0.0);
    for i in 0..9 {
        let t = t_end * i as f64 / 8.0;
        std::fs::write(
            out_dir.join(format!("snapshot_{:03}s.svg", t.round() as i64)),
            figures::snapshot_svg(&sc.environment, log, t),
        )?;
    }
    println!("figures written to {}", out_dir.display());
    Ok(())
}
