//! Command-line front end: solve one epsilon, run the full ladder,
//! verify a stored profile, or run the LP oracle. Outputs are
//! deterministic and byte-identical across reruns; errors are emitted
//! as one JSON object on stderr with the documented exit codes
//! (0 ok, 1 verification failure, 2 infeasible, 3 no root, 4 bad config).

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use pmoment::error::{Result, SolverError};
use pmoment::model::{OracleStatus, SolutionProfile};
use pmoment::{energetics, io, oracle, verify};
use pmoment::{RadialSolver, RunConfig};

#[derive(Parser)]
#[command(name = "pmoment", version, about = "Optimal radial moment densities on an annulus")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Solve the regularized problem at one epsilon; writes density.csv
    /// and report.json.
    Solve {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        epsilon: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Solve the whole epsilon ladder; writes per-epsilon outputs and
    /// ladder.json with the convergence comparison.
    Ladder {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Re-verify a stored density CSV; writes verify.json.
    Verify {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        profile: PathBuf,
        /// Epsilon the profile was solved at (default: smallest ladder entry).
        #[arg(long)]
        epsilon: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the discretized-LP oracle; writes oracle.json and
    /// oracle_density.csv.
    Oracle {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn out_dir(cfg: &RunConfig, flag: Option<PathBuf>) -> Result<PathBuf> {
    let dir = flag
        .or_else(|| cfg.output_dir.as_ref().map(PathBuf::from))
        .ok_or_else(|| {
            SolverError::BadConfig(
                "no output directory: pass --out or set output_dir in the config".into(),
            )
        })?;
    std::fs::create_dir_all(&dir).map_err(|e| {
        SolverError::BadConfig(format!("cannot create output dir {}: {e}", dir.display()))
    })?;
    Ok(dir)
}

fn solve_one(cfg: &RunConfig, epsilon: f64) -> Result<SolutionProfile<f64>> {
    let spec = cfg.spec_with(epsilon)?;
    let solver = RadialSolver::with_options(spec, cfg.solver_options())?;
    solver.build_density()
}

fn write_solution(
    cfg: &RunConfig,
    profile: &SolutionProfile<f64>,
    csv_path: &Path,
    json_path: &Path,
) -> Result<()> {
    let spec = cfg.spec_with(profile.epsilon)?;
    io::write_profile_csv(csv_path, profile)?;
    io::write_json(json_path, &energetics::energy_report(&spec, profile)?)
}

fn cmd_solve(config: &Path, epsilon: f64, out: Option<PathBuf>) -> Result<u8> {
    let cfg = RunConfig::load(config)?;
    let dir = out_dir(&cfg, out)?;
    let profile = solve_one(&cfg, epsilon)?;
    write_solution(
        &cfg,
        &profile,
        &dir.join("density.csv"),
        &dir.join("report.json"),
    )?;
    Ok(0)
}

fn cmd_ladder(config: &Path, out: Option<PathBuf>) -> Result<u8> {
    let cfg = RunConfig::load(config)?;
    let dir = out_dir(&cfg, out)?;
    let mut profiles = Vec::new();
    for &eps in &cfg.epsilon_ladder {
        let profile = solve_one(&cfg, eps)?;
        write_solution(
            &cfg,
            &profile,
            &dir.join(format!("density_{eps}.csv")),
            &dir.join(format!("report_{eps}.json")),
        )?;
        profiles.push(profile);
    }
    let spec = cfg.spec_with(*cfg.epsilon_ladder.last().unwrap())?;
    let tent = pmoment::tent_limit(&spec)?;
    let report = oracle::compare(&spec, &profiles, &tent, None)?;
    io::write_json(&dir.join("ladder.json"), &report)?;
    Ok(0)
}

fn cmd_verify(
    config: &Path,
    profile_path: &Path,
    epsilon: Option<f64>,
    out: Option<PathBuf>,
) -> Result<u8> {
    let cfg = RunConfig::load(config)?;
    let dir = out_dir(&cfg, out)?;
    let eps = epsilon.unwrap_or(*cfg.epsilon_ladder.last().unwrap());
    let spec = cfg.spec_with(eps)?;
    let profile = io::load_profile_csv(profile_path, &spec, eps)?;
    let report = verify::run_verification(&spec, &profile, cfg.tolerances.gap, cfg.seed)?;
    io::write_json(&dir.join("verify.json"), &report)?;
    if report.all_pass {
        Ok(0)
    } else {
        let failing: Vec<&str> = report
            .checks
            .iter()
            .filter(|c| !c.pass)
            .map(|c| c.name.as_str())
            .collect();
        eprintln!(
            "{}",
            serde_json::json!({
                "error": "verification_failure",
                "message": format!("failing checks: {}", failing.join(", ")),
                "checks": failing,
            })
        );
        Ok(1)
    }
}

#[derive(serde::Serialize)]
struct OracleReport {
    status: &'static str,
    moment_opt: f64,
    grid_points: usize,
    max_feasible_mass: f64,
}

fn cmd_oracle(config: &Path, out: Option<PathBuf>) -> Result<u8> {
    let cfg = RunConfig::load(config)?;
    let dir = out_dir(&cfg, out)?;
    let spec = cfg.spec_with(*cfg.epsilon_ladder.last().unwrap())?;
    let max_mass = oracle::max_feasible_mass(&spec);
    let infeasible_report = |max_mass: f64| OracleReport {
        status: "infeasible",
        moment_opt: 0.0,
        grid_points: cfg.lp_grid_points,
        max_feasible_mass: max_mass,
    };
    if max_mass < 1.0 {
        io::write_json(&dir.join("oracle.json"), &infeasible_report(max_mass))?;
        return Err(SolverError::Infeasible(format!(
            "maximum feasible mass {max_mass} is below the required unit mass"
        )));
    }
    let result = oracle::lp_maximize(&spec, cfg.lp_grid_points)?;
    match result.status {
        OracleStatus::Optimal => {
            io::write_json(
                &dir.join("oracle.json"),
                &OracleReport {
                    status: "optimal",
                    moment_opt: result.moment_opt,
                    grid_points: cfg.lp_grid_points,
                    max_feasible_mass: max_mass,
                },
            )?;
            io::write_oracle_csv(&dir.join("oracle_density.csv"), &result)?;
            Ok(0)
        }
        OracleStatus::Infeasible => {
            io::write_json(&dir.join("oracle.json"), &infeasible_report(max_mass))?;
            Err(SolverError::Infeasible(
                "discretized primal has no feasible point".into(),
            ))
        }
    }
}

fn run(cli: Cli) -> Result<u8> {
    match cli.cmd {
        Cmd::Solve {
            config,
            epsilon,
            out,
        } => cmd_solve(&config, epsilon, out),
        Cmd::Ladder { config, out } => cmd_ladder(&config, out),
        Cmd::Verify {
            config,
            profile,
            epsilon,
            out,
        } => cmd_verify(&config, &profile, epsilon, out),
        Cmd::Oracle { config, out } => cmd_oracle(&config, out),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!(
                "{}",
                serde_json::json!({"error": e.kind(), "message": e.to_string()})
            );
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
