//! Independent maximizers of the primal problem at eps = 0: a
//! discretized linear program over a radial grid and the analytic tent
//! reference, used to cross-validate the regularized construction.

use crate::energetics;
use crate::error::{Result, SolverError};
use crate::model::{
    OracleResult, OracleStatus, ProblemSpec, RadialGrid, SolutionProfile, TentProfile,
};
use crate::scalar::{lit, lit_usize, Real};
use crate::simplex::{self, LinearProgram, LpOutcome, Relation};
use crate::solver::{tent_moment, RadialSolver};

fn monomial_integral<F: Real>(k: u32, lo: F, hi: F) -> F {
    let kp = lit_usize::<F>(k as usize + 1);
    (hi.powi(k as i32 + 1) - lo.powi(k as i32 + 1)) / kp
}

/// Largest achievable mass under the gradient bound and zero boundary
/// values: the full-width tent alpha min(r - lo, hi - r) integrated
/// exactly over [lo, hi] against the radial weight, times the surface
/// area factor `omega` (exact piecewise-polynomial integration).
pub fn full_tent_mass<F: Real>(n: u32, alpha: F, lo: F, hi: F, omega: F) -> F {
    if hi <= lo {
        return F::zero();
    }
    let mid = (lo + hi) * lit::<F>(0.5);
    // [lo, mid]: alpha (r - lo) r^{n-1}; [mid, hi]: alpha (hi - r) r^{n-1}.
    let rising = monomial_integral(n, lo, mid) - lo * monomial_integral(n - 1, lo, mid);
    let falling = hi * monomial_integral(n - 1, mid, hi) - monomial_integral(n, mid, hi);
    omega * alpha * (rising + falling)
}

/// [`full_tent_mass`] for a problem specification.
pub fn max_feasible_mass<F: Real>(spec: &ProblemSpec<F>) -> F {
    full_tent_mass(
        spec.n,
        spec.alpha,
        spec.r_inner,
        spec.r_outer,
        spec.surface_area(),
    )
}

/// Build the discretized primal on `panels` uniform panels of
/// [R2, R1]: variables are the interior node values (the endpoints are
/// pinned to zero), the mass normalization uses trapezoid weights, the
/// gradient bound becomes two difference inequalities per edge, and the
/// objective is the trapezoid-weighted payoff moment.
pub fn lp_instance<F: Real>(spec: &ProblemSpec<F>, panels: usize) -> Result<LinearProgram<F>> {
    let grid = RadialGrid::uniform(spec.r_inner, spec.r_outer, panels)?;
    let nodes = grid.nodes();
    let dr = grid.spacing();
    let omega = spec.surface_area();
    let nvars = panels - 1;
    // Trapezoid weight of every interior node is dr (endpoint weights
    // multiply pinned zeros).
    let node_weight = |i: usize| omega * dr * spec.radial_weight(nodes[i]);
    let objective: Vec<F> = (1..panels)
        .map(|i| node_weight(i) * spec.payoff.eval(nodes[i]))
        .collect();
    let mut rows = Vec::with_capacity(1 + 2 * panels);
    let mass_row: Vec<F> = (1..panels).map(node_weight).collect();
    rows.push((mass_row, Relation::Eq, F::one()));
    let bound = spec.alpha * dr;
    for edge in 0..panels {
        // u_{edge+1} - u_edge <= alpha dr and the reverse; endpoints are
        // not variables.
        let mut fwd = vec![F::zero(); nvars];
        if edge + 1 < panels {
            fwd[edge] = F::one();
        }
        if edge >= 1 {
            fwd[edge - 1] = -F::one();
        }
        let mut bwd: Vec<F> = fwd.iter().map(|&v| -v).collect();
        // Skip all-zero rows (cannot happen for panels >= 2, but keep the
        // construction robust).
        if fwd.iter().any(|v| *v != F::zero()) {
            rows.push((fwd, Relation::Le, bound));
            rows.push((std::mem::take(&mut bwd), Relation::Le, bound));
        }
    }
    Ok(LinearProgram { objective, rows })
}

/// Solve the discretized primal exactly; `Infeasible` when the mass
/// normalization is unreachable under the gradient bound.
pub fn lp_maximize<F: Real>(spec: &ProblemSpec<F>, panels: usize) -> Result<OracleResult<F>> {
    let grid = RadialGrid::uniform(spec.r_inner, spec.r_outer, panels)?;
    let infeasible = |grid: RadialGrid<F>| OracleResult {
        u_opt: vec![F::zero(); grid.nodes().len()],
        grid,
        moment_opt: F::zero(),
        status: OracleStatus::Infeasible,
    };
    if max_feasible_mass(spec) < F::one() {
        return Ok(infeasible(grid));
    }
    let lp = lp_instance(spec, panels)?;
    match simplex::solve(&lp)? {
        LpOutcome::Optimal { x, value } => {
            let mut u_opt = vec![F::zero(); panels + 1];
            u_opt[1..panels].copy_from_slice(&x);
            Ok(OracleResult {
                grid,
                u_opt,
                moment_opt: value,
                status: OracleStatus::Optimal,
            })
        }
        LpOutcome::Infeasible => Ok(infeasible(grid)),
        LpOutcome::Unbounded => Err(SolverError::Malformed(
            "discretized primal cannot be unbounded (bounded feasible set)".into(),
        )),
    }
}

/// Convergence diagnostics of an eps-ladder against the eps = 0 oracles.
#[derive(Clone, Debug, serde::Serialize, serde::Deserialize)]
pub struct ComparisonReport {
    pub epsilons: Vec<f64>,
    /// sup_r |u_eps(r) - tent(r)| per ladder entry, tent resampled on
    /// each profile grid.
    pub sup_distances: Vec<f64>,
    pub moments: Vec<f64>,
    /// |C_eps - G(tent apex)| per ladder entry.
    pub c_gaps: Vec<f64>,
    pub distances_strictly_decreasing: bool,
    pub c_gaps_strictly_decreasing: bool,
    pub tent_apex_height: f64,
    pub tent_moment: f64,
    pub lp_moment: Option<f64>,
}

/// Compare a solved eps-ladder with the tent limit and (optionally) the
/// LP optimum.
pub fn compare<F: Real>(
    spec: &ProblemSpec<F>,
    ladder: &[SolutionProfile<F>],
    tent: &TentProfile<F>,
    lp: Option<&OracleResult<F>>,
) -> Result<ComparisonReport> {
    let f = |x: F| x.to_f64().unwrap_or(f64::NAN);
    let solver = RadialSolver::new(spec.clone())?;
    let apex_c = solver.payoff_antiderivative(tent.m);
    let mut epsilons = Vec::new();
    let mut sup_distances = Vec::new();
    let mut moments = Vec::new();
    let mut c_gaps = Vec::new();
    for prof in ladder {
        epsilons.push(f(prof.epsilon));
        let mut d = F::zero();
        for (i, &r) in prof.grid.nodes().iter().enumerate() {
            d = d.max((prof.u[i] - tent.eval(r)).abs());
        }
        // The tent is nonzero on [tent.a, p*) where the profile grid has
        // no nodes; account for the gap at the support edge.
        let lo = tent.a.max(spec.r_inner);
        let hi = prof.p_star;
        if hi > lo {
            d = d.max(tent.eval(lo)).max(tent.eval(hi));
        }
        sup_distances.push(f(d));
        moments.push(f(energetics::moment(spec, prof)?));
        c_gaps.push(f((prof.c_const - apex_c).abs()));
    }
    let strictly_dec = |v: &[f64]| v.windows(2).all(|w| w[1] < w[0]);
    Ok(ComparisonReport {
        distances_strictly_decreasing: !sup_distances.is_empty() && strictly_dec(&sup_distances),
        c_gaps_strictly_decreasing: !c_gaps.is_empty() && strictly_dec(&c_gaps),
        epsilons,
        sup_distances,
        moments,
        c_gaps,
        tent_apex_height: f(tent.h),
        tent_moment: f(tent_moment(spec, tent)?),
        lp_moment: lp.and_then(|o| match o.status {
            OracleStatus::Optimal => Some(f(o.moment_opt)),
            OracleStatus::Infeasible => None,
        }),
    })
}
