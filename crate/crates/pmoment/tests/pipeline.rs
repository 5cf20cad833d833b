//! End-to-end validation at a feasible gradient bound (alpha = 10 on
//! the [1, 6] annulus) where the regularized construction reaches unit
//! mass: the full physics contract holds across the epsilon ladder.
//! Also exercises the CLI binary: file formats, exit codes, negative
//! controls and byte-level determinism.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use std::sync::OnceLock;

use pmoment::energetics::{self, TestFunction};
use pmoment::model::{PayoffFunction, ProblemSpec, SolutionProfile};
use pmoment::oracle;
use pmoment::solver::{tent_limit, tent_moment, RadialSolver, SolverOptions};

const EPS_LADDER: [f64; 6] = [0.5, 0.2, 0.1, 0.05, 0.02, 0.01];

fn spec(epsilon: f64) -> ProblemSpec<f64> {
    ProblemSpec {
        n: 2,
        payoff: PayoffFunction::power(2.0),
        alpha: 10.0,
        r_outer: 6.0,
        r_inner: 1.0,
        epsilon,
    }
}

fn ladder() -> &'static Vec<SolutionProfile<f64>> {
    static LADDER: OnceLock<Vec<SolutionProfile<f64>>> = OnceLock::new();
    LADDER.get_or_init(|| {
        let opts = SolverOptions {
            panels: 1024,
            coarse_panels: 128,
            ..SolverOptions::default()
        };
        EPS_LADDER
            .iter()
            .map(|&eps| {
                RadialSolver::with_options(spec(eps), opts)
                    .unwrap()
                    .build_density()
                    .unwrap()
            })
            .collect()
    })
}

#[test]
fn ladder_constraints_hold() {
    for prof in ladder() {
        let s = spec(prof.epsilon);
        let c = energetics::constraint_report(&s, prof).unwrap();
        assert!(
            c.boundary_inner.max(c.boundary_outer) <= 1e-8,
            "boundary at eps {}",
            prof.epsilon
        );
        assert!(c.min_u >= -1e-12);
        assert!(c.normalization <= 1e-6, "mass residual {:e}", c.normalization);
        assert!(c.gradient_excess <= 1e-12);
    }
}

#[test]
fn ladder_equations_hold() {
    for prof in ladder() {
        let s = spec(prof.epsilon);
        let el = energetics::el_residual(&s, prof).unwrap();
        assert!(el <= 1e-6, "EL {el:e} at eps {}", prof.epsilon);
        let cons = energetics::constitutive_residual(&s, prof).unwrap();
        assert!(cons <= 1e-10, "constitutive {cons:e} at eps {}", prof.epsilon);
    }
}

#[test]
fn ladder_duality_identities_hold() {
    for prof in ladder() {
        let s = spec(prof.epsilon);
        let (i_s, _) = energetics::primal_energy(&s, prof).unwrap();
        let xi = energetics::total_complementary(&s, prof).unwrap();
        let d = energetics::dual_energy(&s, prof).unwrap();
        let scale = i_s.abs().max(1.0);
        assert!((i_s - xi).abs() / scale <= 1e-12, "Xi gap at eps {}", prof.epsilon);
        assert!(
            (i_s - d).abs() / scale <= 1e-5,
            "dual gap {:e} at eps {}",
            (i_s - d).abs() / scale,
            prof.epsilon
        );
    }
    let first = &ladder()[0];
    let s = spec(first.epsilon);
    let bad = energetics::corrupt_multiplier(first, 0.5);
    let (bi, _) = energetics::primal_energy(&s, &bad).unwrap();
    let bd = energetics::dual_energy(&s, &bad).unwrap();
    assert!((bi - bd).abs() / bi.abs().max(1.0) > 1e-2);
}

#[test]
fn ladder_second_variations_signed() {
    for prof in ladder() {
        let s = spec(prof.epsilon);
        for seed in 0..20u64 {
            let tf = TestFunction::seeded(prof.p_star, s.r_outer, seed);
            assert!(energetics::second_variation_primal(&s, prof, &tf).unwrap() >= -1e-10);
            assert!(energetics::second_variation_dual(&s, prof, &tf).unwrap() <= 1e-10);
        }
    }
}

#[test]
fn ladder_converges_to_tent_and_lp() {
    let s = spec(0.01);
    let tent = tent_limit(&s).unwrap();
    let rep = oracle::compare(&s, ladder(), &tent, None).unwrap();
    assert!(rep.distances_strictly_decreasing, "{:?}", rep.sup_distances);
    assert!(rep.c_gaps_strictly_decreasing, "{:?}", rep.c_gaps);
    assert!(*rep.sup_distances.last().unwrap() <= 1e-2 * rep.tent_apex_height);
    let lp = oracle::lp_maximize(&s, 200).unwrap();
    let tm = tent_moment(&s, &tent).unwrap();
    assert!((lp.moment_opt - tm).abs() / tm <= 1e-2);
    let m = energetics::moment(&s, ladder().last().unwrap()).unwrap();
    assert!(
        (m - lp.moment_opt).abs() / lp.moment_opt <= 1e-2,
        "solver moment {m} vs LP {}",
        lp.moment_opt
    );
}

// ---------------------------------------------------------------- CLI --

fn bin(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pmoment"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn write_config(path: &Path, body: &str) {
    std::fs::write(path, body).unwrap();
}

fn feasible_config(dir: &Path, grid: usize) -> PathBuf {
    let p = dir.join("config.json");
    write_config(
        &p,
        &format!(
            r#"{{
  "n": 2,
  "payoff": {{"type": "power", "p": 2.0}},
  "alpha": 10.0,
  "r_outer": 6.0,
  "r_inner": 1.0,
  "epsilon_ladder": [0.1, 0.05],
  "grid_points": {grid},
  "lp_grid_points": 200,
  "tolerances": {{"root": 1e-10, "quadrature": 1e-8, "gap": 1e-5}},
  "seed": 42
}}
"#
        ),
    );
    p
}

#[test]
fn cli_solve_verify_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = feasible_config(dir.path(), 1024);
    let out = dir.path().join("out");
    let solve = bin(&[
        "solve",
        "--config",
        cfg.to_str().unwrap(),
        "--epsilon",
        "0.1",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(solve.status.code(), Some(0), "{}", String::from_utf8_lossy(&solve.stderr));
    let density = out.join("density.csv");
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["epsilon"], 0.1);
    assert!(report["residuals"]["el"].as_f64().unwrap() <= 1e-6);
    let rows = std::fs::read_to_string(&density).unwrap().lines().count();
    assert_eq!(rows, 1026, "header + N+1 nodes");

    let verify = bin(&[
        "verify",
        "--config",
        cfg.to_str().unwrap(),
        "--profile",
        density.to_str().unwrap(),
        "--epsilon",
        "0.1",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(verify.status.code(), Some(0), "{}", String::from_utf8_lossy(&verify.stderr));
    let vr: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("verify.json")).unwrap()).unwrap();
    assert_eq!(vr["all_pass"], true);
}

#[test]
fn cli_verify_flags_corrupted_profile() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = feasible_config(dir.path(), 512);
    let out = dir.path().join("out");
    let solve = bin(&[
        "solve",
        "--config",
        cfg.to_str().unwrap(),
        "--epsilon",
        "0.1",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(solve.status.code(), Some(0));
    // Scale the u and du_dr columns by 1.1.
    let text = std::fs::read_to_string(out.join("density.csv")).unwrap();
    let mut lines = text.lines();
    let mut bad = String::from(lines.next().unwrap());
    bad.push('\n');
    for line in lines {
        let f: Vec<f64> = line.split(',').map(|v| v.parse().unwrap()).collect();
        bad.push_str(&format!(
            "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}\n",
            f[0],
            f[1] * 1.1,
            f[2] * 1.1,
            f[3],
            f[4]
        ));
    }
    let bad_path = out.join("corrupted.csv");
    std::fs::write(&bad_path, bad).unwrap();
    let verify = bin(&[
        "verify",
        "--config",
        cfg.to_str().unwrap(),
        "--profile",
        bad_path.to_str().unwrap(),
        "--epsilon",
        "0.1",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(verify.status.code(), Some(1));
    let err = String::from_utf8_lossy(&verify.stderr);
    assert!(err.contains("euler_lagrange"), "stderr: {err}");

    // Truncated CSV is malformed input.
    let cut: String = text.chars().take(text.len() * 2 / 3).collect();
    let cut_path = out.join("truncated.csv");
    std::fs::write(&cut_path, cut).unwrap();
    let verify = bin(&[
        "verify",
        "--config",
        cfg.to_str().unwrap(),
        "--profile",
        cut_path.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(verify.status.code(), Some(4));
}

#[test]
fn cli_exit_codes_for_bad_inputs() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    // Swapped radii: config validation failure.
    let swapped = dir.path().join("swapped.json");
    write_config(
        &swapped,
        r#"{"n": 2, "payoff": {"type": "power", "p": 2.0}, "alpha": 1.0,
            "r_outer": 0.5, "r_inner": 1.0, "epsilon_ladder": [0.1]}"#,
    );
    let r = bin(&[
        "solve",
        "--config",
        swapped.to_str().unwrap(),
        "--epsilon",
        "0.1",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(r.status.code(), Some(4));
    let err = String::from_utf8_lossy(&r.stderr);
    assert!(err.contains("\"error\""), "stderr: {err}");

    // Tiny alpha: structurally valid but infeasible.
    let tiny = dir.path().join("tiny.json");
    write_config(
        &tiny,
        r#"{"n": 2, "payoff": {"type": "power", "p": 2.0}, "alpha": 1e-6,
            "r_outer": 6.0, "r_inner": 1.0, "epsilon_ladder": [0.1]}"#,
    );
    let r = bin(&[
        "solve",
        "--config",
        tiny.to_str().unwrap(),
        "--epsilon",
        "0.1",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(r.status.code(), Some(2));

    // alpha = 0 on the oracle path: infeasible, not a config error.
    let zero = dir.path().join("zero.json");
    write_config(
        &zero,
        r#"{"n": 2, "payoff": {"type": "power", "p": 2.0}, "alpha": 0.0,
            "r_outer": 6.0, "r_inner": 1.0, "epsilon_ladder": [0.1]}"#,
    );
    let r = bin(&["oracle", "--config", zero.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(r.status.code(), Some(2));
}

#[test]
fn cli_ladder_writes_comparison_and_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = feasible_config(dir.path(), 512);
    let out1 = dir.path().join("out1");
    let out2 = dir.path().join("out2");
    for out in [&out1, &out2] {
        let r = bin(&[
            "ladder",
            "--config",
            cfg.to_str().unwrap(),
            "--out",
            out.to_str().unwrap(),
        ]);
        assert_eq!(r.status.code(), Some(0), "{}", String::from_utf8_lossy(&r.stderr));
    }
    for name in [
        "density_0.1.csv",
        "density_0.05.csv",
        "report_0.1.json",
        "report_0.05.json",
        "ladder.json",
    ] {
        let a = std::fs::read(out1.join(name)).unwrap();
        let b = std::fs::read(out2.join(name)).unwrap();
        assert_eq!(a, b, "{name} differs between reruns");
    }
    let ladder: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out1.join("ladder.json")).unwrap()).unwrap();
    assert_eq!(ladder["distances_strictly_decreasing"], true);
}

#[test]
fn cli_custom_payoff_end_to_end() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("exp.json");
    write_config(
        &cfg,
        r#"{"n": 2, "payoff": {"type": "custom", "name": "exp"}, "alpha": 100.0,
            "r_outer": 6.0, "r_inner": 1.0, "epsilon_ladder": [0.1],
            "grid_points": 512, "lp_grid_points": 200}"#,
    );
    let out = dir.path().join("out");
    let solve = bin(&[
        "solve",
        "--config",
        cfg.to_str().unwrap(),
        "--epsilon",
        "0.1",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(solve.status.code(), Some(0), "{}", String::from_utf8_lossy(&solve.stderr));
    let verify = bin(&[
        "verify",
        "--config",
        cfg.to_str().unwrap(),
        "--profile",
        out.join("density.csv").to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(verify.status.code(), Some(0), "{}", String::from_utf8_lossy(&verify.stderr));

    let oracle = bin(&["oracle", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(oracle.status.code(), Some(0));
    let oj: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("oracle.json")).unwrap()).unwrap();
    assert_eq!(oj["status"], "optimal");
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    let rel = (report["moment"].as_f64().unwrap() - oj["moment_opt"].as_f64().unwrap()).abs()
        / oj["moment_opt"].as_f64().unwrap();
    assert!(rel <= 2e-2, "solver vs LP moment rel {rel:e} (custom payoff)");
}
