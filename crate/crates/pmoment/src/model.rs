//! Problem definition, geometry, grids and result containers.

use std::fmt;
use std::sync::Arc;

use crate::error::{Result, SolverError};
use crate::scalar::{lit, lit_usize, Real};

/// Payoff as a function of radius: either the power form `r^p` or a
/// user-supplied positive, nondecreasing, convex function.
#[derive(Clone)]
pub enum PayoffFunction<F: Real> {
    Power { p: F },
    Custom {
        name: String,
        g: Arc<dyn Fn(F) -> F + Send + Sync>,
    },
}

impl<F: Real> PayoffFunction<F> {
    pub fn power(p: F) -> Self {
        PayoffFunction::Power { p }
    }

    pub fn custom(name: impl Into<String>, g: impl Fn(F) -> F + Send + Sync + 'static) -> Self {
        PayoffFunction::Custom {
            name: name.into(),
            g: Arc::new(g),
        }
    }

    /// Payoff value at radius `r`.
    pub fn eval(&self, r: F) -> F {
        match self {
            PayoffFunction::Power { p } => r.powf(*p),
            PayoffFunction::Custom { g, .. } => g(r),
        }
    }
}

impl<F: Real> fmt::Debug for PayoffFunction<F> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PayoffFunction::Power { p } => write!(f, "Power {{ p: {:?} }}", p),
            PayoffFunction::Custom { name, .. } => write!(f, "Custom {{ name: {:?} }}", name),
        }
    }
}

/// The problem instance: annulus geometry, spatial dimension, payoff,
/// gradient bound and regularization parameter.
#[derive(Clone, Debug)]
pub struct ProblemSpec<F: Real> {
    pub n: u32,
    pub payoff: PayoffFunction<F>,
    pub alpha: F,
    pub r_outer: F,
    pub r_inner: F,
    pub epsilon: F,
}

impl<F: Real> ProblemSpec<F> {
    pub fn with_epsilon(&self, epsilon: F) -> Self {
        let mut s = self.clone();
        s.epsilon = epsilon;
        s
    }

    /// `r^{n-1}`, the radial Jacobian factor.
    pub fn radial_weight(&self, r: F) -> F {
        r.powi(self.n as i32 - 1)
    }

    /// Surface measure of the unit sphere for this dimension.
    pub fn surface_area(&self) -> F {
        sphere_surface_area(self.n).expect("validated n")
    }

    /// n-volume of the annulus: omega * (R1^n - R2^n) / n.
    pub fn annulus_volume(&self) -> F {
        let n = lit_usize::<F>(self.n as usize);
        self.surface_area() * (self.r_outer.powi(self.n as i32) - self.r_inner.powi(self.n as i32))
            / n
    }
}

/// Validates every `ProblemSpec` invariant, returning the spec unchanged.
pub fn validate_spec<F: Real>(raw: ProblemSpec<F>) -> Result<ProblemSpec<F>> {
    if raw.n < 1 {
        return Err(SolverError::BadConfig(format!(
            "n must be a positive integer dimension, got {}",
            raw.n
        )));
    }
    if !(raw.r_inner > F::zero()) {
        return Err(SolverError::BadConfig(format!(
            "r_inner must be positive, got {}",
            raw.r_inner
        )));
    }
    if !(raw.r_outer > raw.r_inner) {
        return Err(SolverError::BadConfig(format!(
            "r_outer must exceed r_inner, got r_outer = {} <= r_inner = {}",
            raw.r_outer, raw.r_inner
        )));
    }
    if !(raw.alpha > F::zero()) {
        return Err(SolverError::BadConfig(format!(
            "alpha must be positive, got {}",
            raw.alpha
        )));
    }
    if !(raw.epsilon > F::zero()) {
        return Err(SolverError::BadConfig(format!(
            "epsilon must be positive, got {}",
            raw.epsilon
        )));
    }
    match &raw.payoff {
        PayoffFunction::Power { p } => {
            if !(*p > F::zero()) {
                return Err(SolverError::BadConfig(format!(
                    "power payoff exponent must be positive, got {}",
                    p
                )));
            }
        }
        PayoffFunction::Custom { name, g } => {
            // Black-box payoff: positivity, monotonicity and convexity are
            // checked by finite sampling only.
            let samples = 1000usize;
            let h = (raw.r_outer - raw.r_inner) / lit_usize::<F>(samples);
            let mut prev = g(raw.r_inner);
            let mut prev2: Option<F> = None;
            let tol = lit::<F>(-1e-10);
            for i in 0..=samples {
                let r = raw.r_inner + h * lit_usize::<F>(i);
                let v = g(r);
                if !(v > F::zero()) {
                    return Err(SolverError::BadConfig(format!(
                        "custom payoff '{}' must be positive; g({}) = {}",
                        name, r, v
                    )));
                }
                if i > 0 && v < prev {
                    return Err(SolverError::BadConfig(format!(
                        "custom payoff '{}' must be nondecreasing; decreases near r = {}",
                        name, r
                    )));
                }
                if let Some(p2) = prev2 {
                    if v - prev - (prev - p2) < tol {
                        return Err(SolverError::BadConfig(format!(
                            "custom payoff '{}' fails the second-difference convexity check near r = {}",
                            name, r
                        )));
                    }
                }
                prev2 = Some(prev);
                prev = v;
            }
        }
    }
    Ok(raw)
}

/// Surface measure of the unit (n-1)-sphere, omega_{n-1} = 2 pi^{n/2} / Gamma(n/2),
/// computed through the half-integer Gamma recurrence (n is an integer, so
/// no general Gamma routine is needed).
pub fn sphere_surface_area<F: Real>(n: u32) -> Result<F> {
    if n < 1 {
        return Err(SolverError::BadConfig(format!(
            "dimension must be >= 1, got {}",
            n
        )));
    }
    let pi = lit::<F>(std::f64::consts::PI);
    // Gamma(1/2) = sqrt(pi), Gamma(1) = 1, Gamma(x+1) = x Gamma(x).
    let mut gamma = if n.is_multiple_of(2) { F::one() } else { pi.sqrt() };
    let mut x = if n.is_multiple_of(2) { F::one() } else { lit::<F>(0.5) };
    while x < lit::<F>(n as f64 / 2.0) {
        gamma = gamma * x;
        x = x + F::one();
    }
    Ok(lit::<F>(2.0) * pi.powf(lit::<F>(n as f64 / 2.0)) / gamma)
}

/// Uniform grid of radii over a closed interval, with an even panel count
/// so composite Simpson applies.
#[derive(Clone, Debug, PartialEq)]
pub struct RadialGrid<F: Real> {
    nodes: Vec<F>,
    spacing: F,
}

impl<F: Real> RadialGrid<F> {
    pub fn uniform(a: F, b: F, panels: usize) -> Result<Self> {
        if !(b > a) {
            return Err(SolverError::BadConfig(format!(
                "grid interval must satisfy b > a, got [{}, {}]",
                a, b
            )));
        }
        if panels < 2 || !panels.is_multiple_of(2) {
            return Err(SolverError::BadConfig(format!(
                "grid panel count must be even and >= 2, got {}",
                panels
            )));
        }
        let h = (b - a) / lit_usize::<F>(panels);
        let mut nodes = Vec::with_capacity(panels + 1);
        for i in 0..=panels {
            nodes.push(a + h * lit_usize::<F>(i));
        }
        // Pin the right endpoint exactly.
        *nodes.last_mut().unwrap() = b;
        Ok(RadialGrid { nodes, spacing: h })
    }

    pub fn nodes(&self) -> &[F] {
        &self.nodes
    }

    pub fn spacing(&self) -> F {
        self.spacing
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn start(&self) -> F {
        self.nodes[0]
    }

    pub fn end(&self) -> F {
        *self.nodes.last().unwrap()
    }
}

/// The constructed density together with its dual fields, sampled on a
/// uniform grid over the support [p_star, R1].
#[derive(Clone, Debug)]
pub struct SolutionProfile<F: Real> {
    pub epsilon: F,
    /// Flux integration constant C.
    pub c_const: F,
    /// Inner support radius.
    pub p_star: F,
    pub grid: RadialGrid<F>,
    /// Density values per node (>= 0, zero at both ends).
    pub u: Vec<F>,
    /// Radial derivative per node; |du| <= alpha.
    pub du: Vec<F>,
    /// Dual multiplier per node, lambda = e^xi in (0, 1].
    pub lambda: Vec<F>,
    /// Flux magnitude per node (>= 0).
    pub theta: Vec<F>,
    /// xi = ln(lambda); kept separately so the log-domain value survives
    /// even where lambda underflows.
    pub xi: Vec<F>,
}

/// The analytic eps -> 0 limit: a piecewise-linear tent with slopes
/// +alpha / -alpha, apex at the support midpoint, normalized to unit mass.
#[derive(Clone, Debug, PartialEq)]
pub struct TentProfile<F: Real> {
    /// Inner support radius.
    pub a: F,
    /// Apex radius, (a + R1) / 2.
    pub m: F,
    /// Apex height, alpha (R1 - a) / 2.
    pub h: F,
    pub alpha: F,
    pub r_outer: F,
}

impl<F: Real> TentProfile<F> {
    /// Tent value at radius `r` (zero outside [a, R1]).
    pub fn eval(&self, r: F) -> F {
        let v = self.alpha * (r - self.a).min(self.r_outer - r);
        v.max(F::zero())
    }
}

/// Every functional of interest evaluated on one profile, with the
/// residuals of the constraints and equations.
#[derive(Clone, Debug, serde::Serialize, serde::Deserialize)]
pub struct EnergyReport {
    pub epsilon: f64,
    pub c_const: f64,
    pub p_star: f64,
    pub moment: f64,
    pub primal_energy_support: f64,
    pub primal_energy_full: f64,
    pub xi_energy: f64,
    pub dual_energy: f64,
    pub duality_gap_rel: f64,
    pub residuals: ResidualBundle,
}

#[derive(Clone, Debug, serde::Serialize, serde::Deserialize)]
pub struct ResidualBundle {
    pub el: f64,
    pub constitutive: f64,
    pub normalization: f64,
    pub boundary: f64,
    pub gradient_excess: f64,
}

/// Constraint residuals of a sampled density (no dual fields involved).
#[derive(Clone, Debug)]
pub struct ConstraintReport<F: Real> {
    pub boundary_inner: F,
    pub boundary_outer: F,
    pub min_u: F,
    pub normalization: F,
    pub gradient_excess: F,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OracleStatus {
    Optimal,
    Infeasible,
}

/// Discretized-LP optimum of the primal problem on a radial grid.
#[derive(Clone, Debug)]
pub struct OracleResult<F: Real> {
    pub grid: RadialGrid<F>,
    pub u_opt: Vec<F>,
    pub moment_opt: F,
    pub status: OracleStatus,
}
