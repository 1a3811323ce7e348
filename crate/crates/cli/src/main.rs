//! `qvi`: forest-harvesting experiments on top of `qvi-core`.

mod config;
mod output;

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::{json, Map, Value};

use qvi_core::validate::{
    compare_analytic, convergence_study, plateau_length, simulate_policy, switch_point_trajectory,
    McOptions,
};
use qvi_core::{
    extract_switch_point, solve_backward, solve_stationary, AnalyticSolution, ForestProblem,
    QviError, SolveOptions, SolverConfig, TimeGrid,
};

use config::{parse_deltas, ConfigError, RunConfig, DEFAULT_DELTAS};
use output::{write_csv, write_json, Cell};

#[derive(Parser, Debug)]
#[command(name = "qvi", version, about = "Impulse-control QVI solver: forest harvesting experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Stationary solve compared with the closed-form value.
    Infinite(Flags),
    /// Backward solve over [0, T] with switch-point trajectory.
    Finite(Flags),
    /// Stationary solves over a list of resolutions.
    Convergence(Flags),
    /// Monte Carlo estimate of the finite-horizon policy's value.
    Simulate(Flags),
}

#[derive(Args, Debug, Default)]
struct Flags {
    /// key = value file applied before the flags.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Spatial step; a comma-separated list for `convergence`.
    #[arg(long)]
    delta_x: Option<String>,
    #[arg(long)]
    t_horizon: Option<f64>,
    #[arg(long)]
    n_t: Option<usize>,
    #[arg(long)]
    x_max: Option<f64>,
    /// central | one_sided
    #[arg(long)]
    scheme: Option<String>,
    #[arg(long)]
    tol: Option<f64>,
    /// direct | sweep
    #[arg(long)]
    solver: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Start every time step from zero (diagnostic).
    #[arg(long)]
    cold_start: bool,
    /// Charge the replanting cost in the terminal payoff.
    #[arg(long)]
    terminal_q: bool,
    #[arg(long)]
    paths: Option<usize>,
    #[arg(long)]
    x0: Option<f64>,
}

#[derive(Debug)]
enum Failure {
    Usage(String),
    Solver(QviError),
    Io(std::io::Error),
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Usage(e.0)
    }
}

impl From<QviError> for Failure {
    fn from(e: QviError) -> Self {
        Failure::Solver(e)
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Io(e)
    }
}

fn resolve(flags: &Flags, convergence: bool) -> Result<RunConfig, Failure> {
    let mut c = RunConfig::default();
    if convergence {
        c.delta_x = DEFAULT_DELTAS.to_vec();
    }
    if let Some(path) = &flags.config {
        c.apply_file(path)?;
    }
    if let Some(d) = &flags.delta_x {
        c.delta_x = parse_deltas(d)?;
    }
    let scalar = [("t_horizon", flags.t_horizon), ("x_max", flags.x_max), ("tol", flags.tol), ("x0", flags.x0)];
    for (key, value) in scalar {
        if let Some(v) = value {
            c.set(key, &v.to_string())?;
        }
    }
    if let Some(n) = flags.n_t {
        c.n_t = n;
    }
    if let Some(s) = &flags.scheme {
        c.set("scheme", s)?;
    }
    if let Some(s) = &flags.solver {
        c.set("solver", s)?;
    }
    if let Some(s) = flags.seed {
        c.seed = s;
    }
    if let Some(o) = &flags.out {
        c.out = o.clone();
    }
    if let Some(p) = flags.paths {
        c.paths = p;
    }
    c.cold_start |= flags.cold_start;
    c.terminal_q |= flags.terminal_q;
    c.validate()?;
    if !convergence && c.delta_x.len() != 1 {
        return Err(Failure::Usage("delta_x takes a single value for this command".into()));
    }
    Ok(c)
}

fn solver_config(c: &RunConfig) -> SolverConfig<f64> {
    SolverConfig {
        scheme: c.scheme,
        tol: c.tol,
        linear: SolveOptions {
            method: c.solver,
            ..SolveOptions::default()
        },
        cold_start: c.cold_start,
        check_invariants: true,
        ..SolverConfig::default()
    }
}

fn report(c: &RunConfig, command: &str, results: Value) -> Value {
    let config: Map<String, Value> = c
        .entries()
        .into_iter()
        .map(|(k, v)| (k.to_string(), Value::String(v)))
        .collect();
    json!({ "command": command, "config": config, "results": results })
}

fn cmd_infinite(c: &RunConfig) -> Result<(), Failure> {
    let dx = c.delta_x[0];
    let problem = ForestProblem::infinite(c.params, dx)?;
    let analytic = AnalyticSolution::new(c.params)?;
    let sol = solve_stationary(&problem, problem.grid(), &solver_config(c))?;
    let grid = problem.grid();
    let y = extract_switch_point(&sol.policy, grid);
    let provenance = c.provenance("infinite");

    let mut nodes: Vec<usize> = (0..grid.len()).collect();
    nodes.sort_by(|&a, &b| grid.coord(a)[0].total_cmp(&grid.coord(b)[0]));
    write_csv(
        &c.out.join("value.csv"),
        &provenance,
        &["x", "numeric", "analytic", "abs_error"],
        nodes.iter().map(|&i| {
            let x = grid.coord(i)[0];
            let v = analytic.value(x);
            vec![x.into(), sol.values[i].into(), v.into(), (sol.values[i] - v).abs().into()]
        }),
    )?;
    let results = json!({
        "switch_point": y,
        "analytic_switch_point": analytic.switch_point,
        "max_error": compare_analytic(&sol.values, grid, &analytic),
        "iterations": sol.iterations(),
        "h": sol.report.h,
        "scheme": sol.report.scheme.name(),
        "stability_passed": sol.report.stability.passed,
        "wall_time_s": sol.report.wall_time.as_secs_f64(),
    });
    write_json(&c.out.join("report.json"), &report(c, "infinite", results))?;
    println!("switch point {y:?} (analytic {:.6}), {} iterations", analytic.switch_point, sol.iterations());
    Ok(())
}

fn finite_problem(c: &RunConfig) -> Result<(ForestProblem<f64>, TimeGrid<f64>), Failure> {
    let problem =
        ForestProblem::finite_with_terminal_q(c.params, c.delta_x[0], c.t_horizon, c.terminal_q)?;
    Ok((problem, TimeGrid::new(c.t_horizon, c.n_t)?))
}

fn cmd_finite(c: &RunConfig) -> Result<(), Failure> {
    let (problem, time) = finite_problem(c)?;
    let grid = problem.grid();
    let sol = solve_backward(&problem, grid, &time, &solver_config(c))?;
    let trajectory = switch_point_trajectory(&sol.policies, &time, grid);
    let provenance = c.provenance("finite");

    write_csv(
        &c.out.join("switch_trajectory.csv"),
        &provenance,
        &["t", "switch_point"],
        trajectory.iter().map(|&(t, y)| vec![t.into(), y.into()]),
    )?;
    let mut nodes: Vec<usize> = (0..grid.len()).collect();
    nodes.sort_by(|&a, &b| grid.coord(a)[0].total_cmp(&grid.coord(b)[0]));
    write_csv(
        &c.out.join("value_t0.csv"),
        &provenance,
        &["x", "value"],
        nodes.iter().map(|&i| vec![grid.coord(i)[0].into(), sol.values[0][i].into()]),
    )?;
    let mut steps = sol.report.steps.clone();
    steps.sort_by_key(|s| s.k);
    write_csv(
        &c.out.join("iterations.csv"),
        &provenance,
        &["k", "iterations"],
        steps.iter().map(|s| vec![s.k.into(), s.iterations.into()]),
    )?;
    let results = json!({
        "switch_point_t0": trajectory[0].1,
        "plateau_length": plateau_length(&trajectory, c.params.x_max, c.t_horizon),
        "value_at_replant_t0": sol.values[0][problem.replant_index()],
        "max_iterations": sol.report.max_iterations,
        "total_iterations": sol.report.total_iterations,
        "max_sup_norm": sol.report.max_sup_norm,
        "h": sol.report.h,
        "scheme": sol.report.scheme.name(),
        "wall_time_s": sol.report.wall_time.as_secs_f64(),
    });
    write_json(&c.out.join("report.json"), &report(c, "finite", results))?;
    println!(
        "switch point at t=0: {}, max iterations per step {}",
        trajectory[0].1, sol.report.max_iterations
    );
    Ok(())
}

#[derive(Serialize)]
struct Rejected {
    delta_x: f64,
    reason: String,
}

fn cmd_convergence(c: &RunConfig) -> Result<(), Failure> {
    let start = Instant::now();
    let study = convergence_study(c.params, &c.delta_x, &solver_config(c))?;
    write_csv(
        &c.out.join("convergence.csv"),
        &c.provenance("convergence"),
        &["delta_x", "max_error", "switch_point", "iterations", "wall_time_s"],
        study.rows.iter().map(|r| {
            vec![
                r.delta_x.into(),
                r.max_error.into(),
                r.switch_point.map_or(Cell::from("none"), Cell::from),
                r.iterations.into(),
                r.wall_time.as_secs_f64().into(),
            ]
        }),
    )?;
    let rejected: Vec<Rejected> = study
        .rejected
        .iter()
        .map(|(d, e)| Rejected {
            delta_x: *d,
            reason: e.to_string(),
        })
        .collect();
    for r in &rejected {
        eprintln!("rejected δx = {}: {}", r.delta_x, r.reason);
    }
    let results = json!({
        "order": study.order,
        "rows": study.rows.len(),
        "rejected": rejected,
        "wall_time_s": start.elapsed().as_secs_f64(),
    });
    write_json(&c.out.join("report.json"), &report(c, "convergence", results))?;
    match study.order {
        Some(o) => println!("fitted order {o:.4} over {} resolutions", study.rows.len()),
        None => println!("fitted order undefined ({} usable resolution)", study.rows.len()),
    }
    Ok(())
}

fn cmd_simulate(c: &RunConfig) -> Result<(), Failure> {
    let (problem, time) = finite_problem(c)?;
    let grid = problem.grid();
    let sol = solve_backward(&problem, grid, &time, &solver_config(c))?;
    let x0 = c.x0.unwrap_or(c.params.replant);
    let est = simulate_policy(&problem, grid, &time, &sol.policies, &[x0], &McOptions::new(c.paths, c.seed))?;
    let solver_value = sol.values[0][grid.nearest_interior(&[x0])];
    write_csv(
        &c.out.join("mc.csv"),
        &c.provenance("simulate"),
        &["paths", "mean", "std_error", "clamp_events", "excluded", "seed", "solver_value"],
        [vec![
            est.paths.into(),
            est.mean.into(),
            est.std_error.into(),
            est.clamp_events.into(),
            est.excluded.into(),
            est.seed.into(),
            solver_value.into(),
        ]],
    )?;
    let results = json!({
        "paths": est.paths,
        "mean": est.mean,
        "std_error": est.std_error,
        "clamp_events": est.clamp_events,
        "excluded": est.excluded,
        "seed": est.seed,
        "solver_value": solver_value,
        "within_three_std_errors": (est.mean - solver_value).abs() <= 3.0 * est.std_error,
    });
    write_json(&c.out.join("report.json"), &report(c, "simulate", results))?;
    println!("mean {:.6} ± {:.6} vs solver {solver_value:.6}", est.mean, est.std_error);
    Ok(())
}

fn run(cli: Cli) -> Result<(), Failure> {
    let (name, flags) = match &cli.command {
        Command::Infinite(f) => ("infinite", f),
        Command::Finite(f) => ("finite", f),
        Command::Convergence(f) => ("convergence", f),
        Command::Simulate(f) => ("simulate", f),
    };
    let c = resolve(flags, name == "convergence")?;
    fs::create_dir_all(&c.out)?;
    log::info!("{}", c.provenance(name));
    match name {
        "infinite" => cmd_infinite(&c),
        "finite" => cmd_finite(&c),
        "convergence" => cmd_convergence(&c),
        _ => cmd_simulate(&c),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Solver(e)) => {
            eprintln!("solver error: {e}");
            ExitCode::from(1)
        }
        Err(Failure::Io(e)) => {
            eprintln!("i/o error: {e}");
            ExitCode::from(1)
        }
    }
}
