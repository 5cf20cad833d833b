//! Run configuration: a single JSON document holding the problem
//! instance, the epsilon ladder, grid sizes, tolerances and the RNG
//! seed for verification test functions.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Result, SolverError};
use crate::model::{PayoffFunction, ProblemSpec};
use crate::solver::SolverOptions;

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum PayoffConfig {
    /// payoff(r) = r^p
    Power { p: f64 },
    /// Named entry of the built-in payoff registry.
    Custom { name: String },
}

impl PayoffConfig {
    pub fn build(&self) -> Result<PayoffFunction<f64>> {
        match self {
            PayoffConfig::Power { p } => Ok(PayoffFunction::power(*p)),
            PayoffConfig::Custom { name } => match name.as_str() {
                "exp" => Ok(PayoffFunction::custom("exp", f64::exp)),
                "cosh" => Ok(PayoffFunction::custom("cosh", f64::cosh)),
                "linear" => Ok(PayoffFunction::custom("linear", |r: f64| r)),
                other => Err(SolverError::BadConfig(format!(
                    "unknown custom payoff '{other}' (registry: exp, cosh, linear)"
                ))),
            },
        }
    }
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    /// Relative tolerance of the nested root solves (support radius and
    /// flux constant).
    #[serde(default = "default_root")]
    pub root: f64,
    /// Relative tolerance of the graded quadrature / Richardson check.
    #[serde(default = "default_quadrature")]
    pub quadrature: f64,
    /// Relative primal-dual gap accepted by `verify`.
    #[serde(default = "default_gap")]
    pub gap: f64,
}

fn default_root() -> f64 {
    1e-10
}
fn default_quadrature() -> f64 {
    1e-8
}
fn default_gap() -> f64 {
    1e-5
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            root: default_root(),
            quadrature: default_quadrature(),
            gap: default_gap(),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub n: u32,
    pub payoff: PayoffConfig,
    pub alpha: f64,
    pub r_outer: f64,
    pub r_inner: f64,
    /// Strictly decreasing, all positive.
    pub epsilon_ladder: Vec<f64>,
    /// Radial panels of the solver grid (even).
    #[serde(default = "default_grid_points")]
    pub grid_points: usize,
    /// Radial panels of the LP oracle grid.
    #[serde(default = "default_lp_grid_points")]
    pub lp_grid_points: usize,
    #[serde(default)]
    pub tolerances: Tolerances,
    /// Default output directory; the CLI --out flag overrides it.
    #[serde(default)]
    pub output_dir: Option<String>,
    /// Seed for the verification test functions.
    #[serde(default = "default_seed")]
    pub seed: u64,
}

fn default_grid_points() -> usize {
    2048
}
fn default_lp_grid_points() -> usize {
    200
}
fn default_seed() -> u64 {
    42
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            SolverError::BadConfig(format!("cannot read config {}: {e}", path.display()))
        })?;
        let cfg: RunConfig = serde_json::from_str(&text)
            .map_err(|e| SolverError::BadConfig(format!("invalid config JSON: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(SolverError::BadConfig(msg));
        if self.n == 0 {
            return bad("dimension n must be >= 1".into());
        }
        if !(self.alpha >= 0.0) || !self.alpha.is_finite() {
            return bad(format!("alpha must be finite and >= 0, got {}", self.alpha));
        }
        if !(self.r_inner > 0.0) || !(self.r_outer > self.r_inner) {
            return bad(format!(
                "need 0 < r_inner < r_outer, got r_inner = {}, r_outer = {}",
                self.r_inner, self.r_outer
            ));
        }
        if self.epsilon_ladder.is_empty() {
            return bad("epsilon_ladder must be nonempty".into());
        }
        for w in self.epsilon_ladder.windows(2) {
            if !(w[1] < w[0]) {
                return bad(format!(
                    "epsilon_ladder must be strictly decreasing, got {} then {}",
                    w[0], w[1]
                ));
            }
        }
        if !(*self.epsilon_ladder.last().unwrap() > 0.0) {
            return bad("epsilon_ladder entries must be positive".into());
        }
        if self.grid_points < 2 || !self.grid_points.is_multiple_of(2) {
            return bad(format!(
                "grid_points must be even and >= 2, got {}",
                self.grid_points
            ));
        }
        if self.lp_grid_points < 2 || !self.lp_grid_points.is_multiple_of(2) {
            return bad(format!(
                "lp_grid_points must be even and >= 2, got {}",
                self.lp_grid_points
            ));
        }
        let t = &self.tolerances;
        if !(t.root > 0.0) || !(t.quadrature > 0.0) || !(t.gap > 0.0) {
            return bad(format!(
                "tolerances must be positive, got root = {}, quadrature = {}, gap = {}",
                t.root, t.quadrature, t.gap
            ));
        }
        self.payoff.build().map(|_| ())
    }

    /// Problem instance at one epsilon of the ladder. Does not validate
    /// the analytic constraints (the solver does on construction).
    pub fn spec_with(&self, epsilon: f64) -> Result<ProblemSpec<f64>> {
        if !(epsilon > 0.0) {
            return Err(SolverError::BadConfig(format!(
                "epsilon must be positive, got {epsilon}"
            )));
        }
        Ok(ProblemSpec {
            n: self.n,
            payoff: self.payoff.build()?,
            alpha: self.alpha,
            r_outer: self.r_outer,
            r_inner: self.r_inner,
            epsilon,
        })
    }

    pub fn solver_options(&self) -> SolverOptions {
        SolverOptions {
            panels: self.grid_points,
            support_tol_rel: self.tolerances.root,
            constant_tol_rel: (self.tolerances.root * 1e-2).max(1e-14),
            richardson_tol: self.tolerances.quadrature,
            ..SolverOptions::default()
        }
    }
}
