//! Bit-stable file emission and profile loading. Numbers are written
//! with 17 significant digits so a reloaded CSV reproduces the solved
//! profile exactly; all line endings are LF.

use std::io::Write as _;
use std::path::Path;

use crate::dae::{self, DaeParams};
use crate::error::{Result, SolverError};
use crate::model::{OracleResult, ProblemSpec, RadialGrid, SolutionProfile};
use crate::solver::RadialSolver;

pub const PROFILE_HEADER: &str = "r,u,du_dr,lambda,theta";

fn fmt17(x: f64) -> String {
    format!("{x:.16e}")
}

/// Write a solved profile as density CSV (columns r,u,du_dr,lambda,theta).
pub fn write_profile_csv(path: &Path, profile: &SolutionProfile<f64>) -> Result<()> {
    let mut out = String::with_capacity(profile.u.len() * 120);
    out.push_str(PROFILE_HEADER);
    out.push('\n');
    for (i, &r) in profile.grid.nodes().iter().enumerate() {
        out.push_str(&fmt17(r));
        for v in [
            profile.u[i],
            profile.du[i],
            profile.lambda[i],
            profile.theta[i],
        ] {
            out.push(',');
            out.push_str(&fmt17(v));
        }
        out.push('\n');
    }
    write_text(path, &out)
}

/// Write the LP oracle density as CSV (columns r,u).
pub fn write_oracle_csv(path: &Path, oracle: &OracleResult<f64>) -> Result<()> {
    let mut out = String::from("r,u\n");
    for (&r, &u) in oracle.grid.nodes().iter().zip(&oracle.u_opt) {
        out.push_str(&fmt17(r));
        out.push(',');
        out.push_str(&fmt17(u));
        out.push('\n');
    }
    write_text(path, &out)
}

/// Load a density CSV back into a profile. The log-multiplier is
/// recovered from the lambda column, falling back to the dual algebraic
/// equation where lambda underflowed to zero; the flux constant is
/// recovered from the flux identity r^{n-1} lambda u' = C - G at the
/// strongest-flux node.
pub fn load_profile_csv(
    path: &Path,
    spec: &ProblemSpec<f64>,
    epsilon: f64,
) -> Result<SolutionProfile<f64>> {
    let malformed = |msg: String| SolverError::Malformed(format!("{}: {msg}", path.display()));
    let text = std::fs::read_to_string(path)
        .map_err(|e| malformed(format!("cannot read profile: {e}")))?;
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h.trim_end() == PROFILE_HEADER => {}
        other => {
            return Err(malformed(format!(
                "expected header '{PROFILE_HEADER}', got {other:?}"
            )))
        }
    }
    let mut cols: [Vec<f64>; 5] = Default::default();
    for (ln, line) in lines.enumerate() {
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 5 {
            return Err(malformed(format!(
                "row {}: expected 5 fields, got {}",
                ln + 2,
                fields.len()
            )));
        }
        for (c, f) in cols.iter_mut().zip(&fields) {
            let v: f64 = f
                .trim()
                .parse()
                .map_err(|e| malformed(format!("row {}: bad number '{f}': {e}", ln + 2)))?;
            c.push(v);
        }
    }
    let [r, u, du, lambda, theta] = cols;
    let rows = r.len();
    if rows < 3 || (rows - 1) % 2 != 0 {
        return Err(malformed(format!(
            "need an odd node count >= 3 (even panel count), got {rows} rows"
        )));
    }
    let panels = rows - 1;
    let grid = RadialGrid::uniform(r[0], r[panels], panels)?;
    let span = r[panels] - r[0];
    for (&parsed, &node) in r.iter().zip(grid.nodes()) {
        if (parsed - node).abs() > 1e-9 * span {
            return Err(malformed(format!(
                "radii are not uniformly spaced near r = {parsed}"
            )));
        }
    }
    let dae = DaeParams::new(spec.alpha, epsilon)?;
    let mut xi = Vec::with_capacity(rows);
    for i in 0..rows {
        if lambda[i] > 0.0 {
            xi.push(lambda[i].ln());
        } else {
            let q = (theta[i] * theta[i]).min(spec.alpha * spec.alpha);
            xi.push(dae::e_invert_t(q, &dae)?);
        }
    }
    // Flux identity at the strongest-flux node; on corrupted inputs this
    // is only a diagnostic value.
    let solver = RadialSolver::new(spec.with_epsilon(epsilon))?;
    let mut c_const = solver.payoff_antiderivative(r[panels]);
    let mut best = -1.0;
    for i in 0..rows {
        let strength = lambda[i] * du[i].abs();
        if strength > best {
            best = strength;
            c_const = solver.payoff_antiderivative(r[i])
                + r[i].powi(spec.n as i32 - 1) * lambda[i] * du[i];
        }
    }
    Ok(SolutionProfile {
        epsilon,
        c_const,
        p_star: r[0],
        grid,
        u,
        du,
        lambda,
        theta,
        xi,
    })
}

/// Serialize as pretty JSON with a trailing newline (bit-stable for a
/// fixed value).
pub fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| SolverError::Malformed(format!("JSON serialization failed: {e}")))?;
    text.push('\n');
    write_text(path, &text)
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    let mut f = std::fs::File::create(path).map_err(|e| {
        SolverError::Malformed(format!("cannot create {}: {e}", path.display()))
    })?;
    f.write_all(text.as_bytes())
        .map_err(|e| SolverError::Malformed(format!("cannot write {}: {e}", path.display())))
}
