//! Construction of the regularized optimal density: the radial flux field,
//! the boundary-mismatch root-find fixing the flux constant C, the mass
//! root-find fixing the inner support radius p*, density assembly on the
//! final grid, and the eps -> 0 tent limit.

use std::sync::Arc;

use crate::dae::{e_invert_t, slope_from_t, DaeParams};
use crate::error::{Result, SolverError};
use crate::model::{
    validate_spec, PayoffFunction, ProblemSpec, RadialGrid, SolutionProfile, TentProfile,
};
use crate::quad::{simpson_cumulative, simpson_samples};
use crate::rootfind::solve_bracketed;
use crate::scalar::{lit, lit_usize, Real};

/// Numerical knobs. Tolerances are relative to the natural scale of the
/// quantity being solved for.
#[derive(Clone, Copy, Debug)]
pub struct SolverOptions {
    /// Panels of the final density grid (even).
    pub panels: usize,
    /// Panels used inside root-finding sweeps (even).
    pub coarse_panels: usize,
    /// Outer (support radius) bisection tolerance, relative to R1 - R2.
    pub support_tol_rel: f64,
    /// Inner (flux constant) bisection tolerance, relative to G(R1) - G(a);
    /// kept 100x tighter than the outer tolerance so the outer root-find
    /// sees its own noise floor below its tolerance.
    pub constant_tol_rel: f64,
    /// Threshold of the moment halving check that triggers one grid doubling.
    pub richardson_tol: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            panels: 2048,
            coarse_panels: 256,
            support_tol_rel: 1e-10,
            constant_tol_rel: 1e-12,
            richardson_tol: 1e-8,
        }
    }
}

/// Diagnostics of the support root-find.
#[derive(Clone, Debug)]
pub struct SupportSolve<F: Real> {
    pub p_star: F,
    pub c_at_p_star: F,
    pub iterations: usize,
    /// (a, mass) evaluations of the fine stage, in evaluation order.
    pub history: Vec<(f64, f64)>,
}

/// Payoff antiderivative G with r^{n-1} weight: G(r) = r^{n+p}/(n+p) for
/// the power payoff; for a custom payoff, G(r) = int_{R2}^r rho^{n-1} g(rho) drho
/// (the base-point constant is absorbed into C).
#[derive(Clone)]
enum GKind<F: Real> {
    Power { np: F },
    Table {
        start: F,
        spacing: F,
        prefix: Vec<F>,
        g: Arc<dyn Fn(F) -> F + Send + Sync>,
    },
}

#[derive(Clone)]
pub struct Antiderivative<F: Real> {
    kind: GKind<F>,
    n: u32,
    r_inner: F,
    r_outer: F,
}

const G_TABLE_PANELS: usize = 8192;

impl<F: Real> Antiderivative<F> {
    fn new(spec: &ProblemSpec<F>) -> Result<Self> {
        let kind = match &spec.payoff {
            PayoffFunction::Power { p } => GKind::Power {
                np: lit_usize::<F>(spec.n as usize) + *p,
            },
            PayoffFunction::Custom { g, .. } => {
                let n = spec.n;
                let grid = RadialGrid::uniform(spec.r_inner, spec.r_outer, G_TABLE_PANELS)?;
                let gc = g.clone();
                let weighted: Vec<F> = grid
                    .nodes()
                    .iter()
                    .map(|&r| r.powi(n as i32 - 1) * gc(r))
                    .collect();
                let prefix = simpson_cumulative(&weighted, grid.spacing())?;
                GKind::Table {
                    start: spec.r_inner,
                    spacing: grid.spacing(),
                    prefix,
                    g: g.clone(),
                }
            }
        };
        Ok(Antiderivative {
            kind,
            n: spec.n,
            r_inner: spec.r_inner,
            r_outer: spec.r_outer,
        })
    }

    /// G(r); strictly increasing on [R2, R1].
    pub fn eval(&self, r: F) -> F {
        match &self.kind {
            GKind::Power { np } => r.powf(*np) / *np,
            GKind::Table {
                start,
                spacing,
                prefix,
                g,
            } => {
                let pos = (r - *start) / *spacing;
                let mut k = pos
                    .floor()
                    .to_f64()
                    .map(|x| x.max(0.0) as usize)
                    .unwrap_or(0);
                if k >= prefix.len() - 1 {
                    k = prefix.len() - 1;
                }
                let node = *start + *spacing * lit_usize::<F>(k);
                let s = r - node;
                if s == F::zero() {
                    return prefix[k];
                }
                // Two-panel Simpson over the in-cell tail.
                let w = |rho: F| rho.powi(self.n as i32 - 1) * g(rho);
                let mid = node + s * lit::<F>(0.5);
                prefix[k] + s / lit::<F>(6.0) * (w(node) + lit::<F>(4.0) * w(mid) + w(r))
            }
        }
    }

    /// The unique r in [R2, R1] with G(r) = v, via bisection.
    pub fn invert(&self, v: F) -> Result<F> {
        let g_lo = self.eval(self.r_inner);
        let g_hi = self.eval(self.r_outer);
        let slack = lit::<F>(1e-9) * (g_hi - g_lo).abs();
        if v < g_lo - slack || v > g_hi + slack {
            return Err(SolverError::DomainError(format!(
                "antiderivative inverse: value {} outside [G(R2), G(R1)] = [{}, {}]",
                v, g_lo, g_hi
            )));
        }
        let v = v.max(g_lo).min(g_hi);
        let mut lo = self.r_inner;
        let mut hi = self.r_outer;
        let tol = lit::<F>(1e-13) * self.r_outer;
        while hi - lo > tol {
            let mid = (lo + hi) * lit::<F>(0.5);
            if self.eval(mid) < v {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok((lo + hi) * lit::<F>(0.5))
    }
}

/// Radial flux field theta = F(r) y for a given constant C:
/// F(r) = (C - G(r)) / r^n, |theta|(r) = |C - G(r)| / r^{n-1}.
pub struct FluxField<'s, F: Real> {
    solver: &'s RadialSolver<F>,
    pub c_const: F,
}

impl<'s, F: Real> FluxField<'s, F> {
    /// Scalar coefficient F(r) with theta = F(r) (y_1, ..., y_n).
    pub fn coefficient(&self, r: F) -> F {
        (self.c_const - self.solver.g.eval(r)) / r.powi(self.solver.spec.n as i32)
    }

    /// Flux magnitude |theta|(r) >= 0.
    pub fn theta_mag(&self, r: F) -> F {
        ((self.c_const - self.solver.g.eval(r)) / self.solver.spec.radial_weight(r)).abs()
    }
}

pub struct RadialSolver<F: Real> {
    spec: ProblemSpec<F>,
    dae: DaeParams<F>,
    g: Antiderivative<F>,
    opts: SolverOptions,
}

impl<F: Real> RadialSolver<F> {
    pub fn new(spec: ProblemSpec<F>) -> Result<Self> {
        Self::with_options(spec, SolverOptions::default())
    }

    pub fn with_options(spec: ProblemSpec<F>, opts: SolverOptions) -> Result<Self> {
        let spec = validate_spec(spec)?;
        if opts.panels < 2 || !opts.panels.is_multiple_of(2) || opts.coarse_panels < 2
            || !opts.coarse_panels.is_multiple_of(2)
        {
            return Err(SolverError::BadConfig(format!(
                "grid panel counts must be even and >= 2, got {} / {}",
                opts.panels, opts.coarse_panels
            )));
        }
        let dae = DaeParams::new(spec.alpha, spec.epsilon)?;
        let g = Antiderivative::new(&spec)?;
        Ok(RadialSolver { spec, dae, g, opts })
    }

    pub fn spec(&self) -> &ProblemSpec<F> {
        &self.spec
    }

    pub fn options(&self) -> &SolverOptions {
        &self.opts
    }

    pub fn dae_params(&self) -> &DaeParams<F> {
        &self.dae
    }

    pub fn antiderivative(&self) -> &Antiderivative<F> {
        &self.g
    }

    pub fn flux_field(&self, c_const: F) -> FluxField<'_, F> {
        FluxField {
            solver: self,
            c_const,
        }
    }

    /// G(r), the weighted payoff antiderivative.
    pub fn payoff_antiderivative(&self, r: F) -> F {
        self.g.eval(r)
    }

    /// G^{-1}(v).
    pub fn inverse_antiderivative(&self, v: F) -> Result<F> {
        self.g.invert(v)
    }

    /// Signed slope mu(rho, c) = sign(c - G(rho)) sqrt(alpha^2 + 2 eps ln lambda),
    /// with lambda from the dual algebraic equation at flux magnitude
    /// |c - G(rho)| / rho^{n-1}. |mu| <= alpha always.
    pub fn mu_slope(&self, rho: F, c: F) -> Result<F> {
        Ok(self.mu_and_log_multiplier(rho, c)?.0)
    }

    /// (mu, t = ln lambda) at one radius.
    fn mu_and_log_multiplier(&self, rho: F, c: F) -> Result<(F, F)> {
        let diff = c - self.g.eval(rho);
        let theta = diff / self.spec.radial_weight(rho);
        let t = e_invert_t(theta * theta, &self.dae)?;
        let slope = slope_from_t(t, &self.dae)?;
        let mu = if diff >= F::zero() { slope } else { -slope };
        Ok((mu, t))
    }

    /// Candidate density value at the inner radius a given u(R1) = 0:
    /// M(c) = -int_a^{R1} mu(rho, c) drho. Strictly monotone in c; its
    /// unique zero is C(a).
    pub fn boundary_mismatch(&self, c: F, a: F) -> Result<F> {
        self.boundary_mismatch_on(c, a, self.opts.panels)
    }

    fn boundary_mismatch_on(&self, c: F, a: F, panels: usize) -> Result<F> {
        let grid = RadialGrid::uniform(a, self.spec.r_outer, panels)?;
        let ints = self.mu_panel_integrals(&grid, c, &|_| F::one(), self.precision_for(panels))?;
        Ok(-ints.into_iter().sum::<F>())
    }

    /// Root-finding sweeps on the coarse grid only need the quadrature
    /// noise below the coarse tolerance; final evaluations go to ~1e-13.
    fn precision_for(&self, panels: usize) -> f64 {
        if panels <= self.opts.coarse_panels {
            1e-8
        } else {
            1e-13
        }
    }

    /// Per-panel integrals of phi(rho) mu(rho, c).
    ///
    /// mu(rho) = sign(c - G) sqrt(alpha^2 + 2 eps ln lambda) behaves like
    /// sqrt(alpha^2 + 2 eps ln|rho - r0|) near the flux sign change
    /// r0 = G^{-1}(c): a logarithmic shoulder whose derivatives grow like
    /// eps / (alpha d^4) at distance d, collapsing to a step of width
    /// ~e^{-alpha^2/(2 eps)} at r0 itself. Uniform Simpson is O(h) there,
    /// so panels are integrated with a distance-graded scheme: geometric
    /// blocks accumulating toward r0 within one panel of it, and
    /// 2^m-subdivided Simpson with m shrinking ~log2(d/h) further out.
    /// `tol_rel` is the per-panel error target relative to alpha * h.
    fn mu_panel_integrals(
        &self,
        grid: &RadialGrid<F>,
        c: F,
        phi: &dyn Fn(F) -> F,
        tol_rel: f64,
    ) -> Result<Vec<F>> {
        let kink = if c > self.g.eval(grid.start()) && c < self.g.eval(grid.end()) {
            Some(self.g.invert(c)?)
        } else {
            None
        };
        let f = |rho: F| -> Result<F> { Ok(phi(rho) * self.mu_and_log_multiplier(rho, c)?.0) };
        let nodes = grid.nodes();
        let h = grid.spacing();
        // Subdivision level needed one panel from the kink:
        // (eps / alpha^2) / (480 * 16^m) <= tol_rel.
        let (alpha, eps) = (
            self.spec.alpha.to_f64().unwrap_or(1.0),
            self.spec.epsilon.to_f64().unwrap_or(1.0),
        );
        let m0 = (eps / (480.0 * alpha * alpha * tol_rel)).log2() / 4.0;
        let block_panels = if tol_rel <= 1e-10 { 8 } else { 4 };
        let mut out = Vec::with_capacity(nodes.len() - 1);
        for k in 0..nodes.len() - 1 {
            let (lo, hi) = (nodes[k], nodes[k + 1]);
            let v = match kink {
                Some(r0) if r0 > lo && r0 < hi => {
                    self.graded_side(&f, r0, F::zero(), r0 - lo, -F::one(), block_panels)?
                        + self.graded_side(&f, r0, F::zero(), hi - r0, F::one(), block_panels)?
                }
                Some(r0) => {
                    let (d_near, d_far, sign) = if r0 <= lo {
                        (lo - r0, hi - r0, F::one())
                    } else {
                        (r0 - hi, r0 - lo, -F::one())
                    };
                    if d_near < h {
                        self.graded_side(&f, r0, d_near, d_far, sign, block_panels)?
                    } else {
                        let dist = (d_near / h).to_f64().unwrap_or(f64::INFINITY);
                        let m = (m0 - dist.log2()).ceil().clamp(0.0, 12.0) as u32;
                        composite_simpson_fn(&f, lo, hi, 1usize << m)?
                    }
                }
                None => composite_simpson_fn(&f, lo, hi, 1)?,
            };
            out.push(v);
        }
        Ok(out)
    }

    /// Integral of f over { r0 + sign*d : d in [d_near, d_far] } with
    /// geometric blocks halving toward r0, `block_panels` Simpson panels
    /// per block. Terminates when the block collapses below float spacing;
    /// the unresolved tail has width < one ulp of r0 and |f| <= alpha*|phi|,
    /// so it is discarded.
    fn graded_side(
        &self,
        f: &dyn Fn(F) -> Result<F>,
        r0: F,
        d_near: F,
        d_far: F,
        sign: F,
        block_panels: usize,
    ) -> Result<F> {
        let half = lit::<F>(0.5);
        let mut acc = F::zero();
        let mut outer = d_far;
        for _ in 0..80 {
            if outer <= d_near {
                break;
            }
            let inner = (outer * half).max(d_near);
            let (a, b) = (r0 + sign * outer.min(outer), r0 + sign * inner);
            let (lo, hi) = if a < b { (a, b) } else { (b, a) };
            if hi > lo {
                acc = acc + composite_simpson_fn(f, lo, hi, block_panels)?;
            } else {
                break; // below float resolution around r0
            }
            if inner <= d_near {
                break;
            }
            outer = inner;
        }
        Ok(acc)
    }

    /// Largest max over rho in [a, R1] of (sign) (c - G(rho)) / rho^{n-1},
    /// by grid scan plus local ternary refinement.
    fn sup_flux(&self, c: F, a: F, positive_part: bool) -> F {
        let samples = 1024usize;
        let h = (self.spec.r_outer - a) / lit_usize::<F>(samples);
        let f = |rho: F| {
            let d = (c - self.g.eval(rho)) / self.spec.radial_weight(rho);
            if positive_part {
                d
            } else {
                -d
            }
        };
        let mut best = F::neg_infinity();
        let mut best_i = 0usize;
        for i in 0..=samples {
            let rho = a + h * lit_usize::<F>(i);
            let v = f(rho);
            if v > best {
                best = v;
                best_i = i;
            }
        }
        // Golden-section refinement over the two panels around the best node.
        let mut lo = a + h * lit_usize::<F>(best_i.saturating_sub(1));
        let mut hi = (a + h * lit_usize::<F>(best_i + 1)).min(self.spec.r_outer);
        let phi = lit::<F>(0.381_966_011_250_105_2);
        for _ in 0..80 {
            let x1 = lo + (hi - lo) * phi;
            let x2 = hi - (hi - lo) * phi;
            if f(x1) > f(x2) {
                hi = x2;
            } else {
                lo = x1;
            }
        }
        best.max(f((lo + hi) * lit::<F>(0.5)))
    }

    /// The largest subinterval of [G(a), G(R1)] on which the flux magnitude
    /// stays within alpha over the whole of [a, R1] (so the dual algebraic
    /// equation is solvable at every radius).
    pub fn feasible_constant_bracket(&self, a: F) -> Result<(F, F)> {
        let g_lo = self.g.eval(a);
        let g_hi = self.g.eval(self.spec.r_outer);
        let alpha = self.spec.alpha;
        // sup of (c - G)/w is increasing in c; sup of (G - c)/w decreasing.
        let c_hi = if self.sup_flux(g_hi, a, true) <= alpha {
            g_hi
        } else {
            let mut feas = g_lo; // sup(G(a)) <= 0 < alpha always
            let mut infeas = g_hi;
            let tol = lit::<F>(1e-13) * (g_hi - g_lo);
            while infeas - feas > tol {
                let mid = (feas + infeas) * lit::<F>(0.5);
                if self.sup_flux(mid, a, true) <= alpha {
                    feas = mid;
                } else {
                    infeas = mid;
                }
            }
            feas
        };
        let c_lo = if self.sup_flux(g_lo, a, false) <= alpha {
            g_lo
        } else {
            let mut feas = g_hi;
            let mut infeas = g_lo;
            let tol = lit::<F>(1e-13) * (g_hi - g_lo);
            while feas - infeas > tol {
                let mid = (feas + infeas) * lit::<F>(0.5);
                if self.sup_flux(mid, a, false) <= alpha {
                    feas = mid;
                } else {
                    infeas = mid;
                }
            }
            feas
        };
        if c_lo > c_hi {
            return Err(SolverError::Infeasible(format!(
                "no admissible flux constant on [{}, {}]: alpha = {} too small for the geometry",
                a, self.spec.r_outer, alpha
            )));
        }
        Ok((c_lo, c_hi))
    }

    /// C(a): the unique zero of the boundary mismatch inside the feasible
    /// bracket, solved coarse-to-fine to tolerance
    /// `constant_tol_rel * (G(R1) - G(a))` (the secant polish typically
    /// lands far below it).
    pub fn solve_constant(&self, a: F) -> Result<F> {
        self.solve_constant_on(a, self.opts.panels, None)
    }

    fn solve_constant_on(&self, a: F, panels: usize, hint: Option<F>) -> Result<F> {
        let (c_lo, c_hi) = self.feasible_constant_bracket(a)?;
        let range = self.g.eval(self.spec.r_outer) - self.g.eval(a);
        let fine_tol = lit::<F>(self.opts.constant_tol_rel) * range;
        // Warm start: bracket around a caller-provided guess directly on
        // the target grid (root-finding sweeps move a in tiny steps, so
        // the previous C is an excellent guess).
        if let Some(h0) = hint {
            if h0 > c_lo && h0 < c_hi {
                let mut w = lit::<F>(1e-5) * range;
                for _ in 0..4 {
                    let lo = (h0 - w).max(c_lo);
                    let hi = (h0 + w).min(c_hi);
                    match solve_bracketed(
                        |c| self.boundary_mismatch_on(c, a, panels),
                        lo,
                        hi,
                        fine_tol,
                        8,
                        "flux constant",
                    ) {
                        Ok(c) => return Ok(c),
                        Err(SolverError::NoRoot(_)) if lo > c_lo || hi < c_hi => {
                            w = w * lit::<F>(16.0);
                        }
                        Err(e) => return Err(e),
                    }
                }
            }
        }
        let coarse_tol = lit::<F>(1e-7) * range;
        let coarse = solve_bracketed(
            |c| self.boundary_mismatch_on(c, a, self.opts.coarse_panels),
            c_lo,
            c_hi,
            coarse_tol,
            4,
            "flux constant (coarse)",
        )?;
        if panels <= self.opts.coarse_panels {
            return Ok(coarse);
        }
        // Re-bracket around the coarse root on the fine grid; the coarse
        // quadrature bias in c is well below the window.
        let mut w = lit::<F>(1e-6) * range;
        loop {
            let lo = (coarse - w).max(c_lo);
            let hi = (coarse + w).min(c_hi);
            match solve_bracketed(
                |c| self.boundary_mismatch_on(c, a, panels),
                lo,
                hi,
                fine_tol,
                8,
                "flux constant",
            ) {
                Ok(c) => return Ok(c),
                Err(SolverError::NoRoot(_)) if lo > c_lo || hi < c_hi => {
                    w = w * lit::<F>(8.0);
                }
                Err(e) => return Err(e),
            }
        }
    }

    /// Density candidate with support [a, R1] on a uniform grid.
    fn density_on(&self, a: F, c: F, panels: usize) -> Result<DensityFields<F>> {
        let grid = RadialGrid::uniform(a, self.spec.r_outer, panels)?;
        let m = grid.len();
        let mut du = Vec::with_capacity(m);
        let mut xi = Vec::with_capacity(m);
        let mut theta = Vec::with_capacity(m);
        for &rho in grid.nodes() {
            let (mu, t) = self.mu_and_log_multiplier(rho, c)?;
            du.push(mu);
            xi.push(t);
            theta.push(((c - self.g.eval(rho)) / self.spec.radial_weight(rho)).abs());
        }
        // u(r_i) = -int_{r_i}^{R1} mu: suffix sums of the kink-aware panel
        // integrals; u(R1) = 0 exactly, u(a) = M(c) (machine-level once C
        // is solved).
        let ints = self.mu_panel_integrals(&grid, c, &|_| F::one(), self.precision_for(panels))?;
        let mut u = vec![F::zero(); m];
        for i in (0..m - 1).rev() {
            u[i] = u[i + 1] - ints[i];
        }
        Ok(DensityFields {
            grid,
            u,
            du,
            xi,
            theta,
        })
    }

    /// Mass of the candidate by parts: with W(r) = int_a^r rho^{n-1} drho,
    /// omega int w u dr = -omega int W mu dr exactly (both boundary terms
    /// vanish), which keeps the near-discontinuity of mu under the
    /// adaptive kink panel instead of under a corner of u.
    fn mass_parts(&self, a: F, c: F, panels: usize) -> Result<F> {
        let grid = RadialGrid::uniform(a, self.spec.r_outer, panels)?;
        let n = lit_usize::<F>(self.spec.n as usize);
        let an = a.powi(self.spec.n as i32);
        let w_prim = move |r: F| (r.powi(self.spec.n as i32) - an) / n;
        let ints = self.mu_panel_integrals(&grid, c, &w_prim, self.precision_for(panels))?;
        Ok(-self.spec.surface_area() * ints.into_iter().sum::<F>())
    }

    /// Payoff moment by the same parts identity with G in place of W.
    fn moment_parts(&self, a: F, c: F, panels: usize) -> Result<F> {
        let grid = RadialGrid::uniform(a, self.spec.r_outer, panels)?;
        let ga = self.g.eval(a);
        let phi = move |r: F| self.g.eval(r) - ga;
        let ints = self.mu_panel_integrals(&grid, c, &phi, self.precision_for(panels))?;
        Ok(-self.spec.surface_area() * ints.into_iter().sum::<F>())
    }

    /// Mass and flux constant at support radius a on `panels` panels,
    /// optionally warm-started from a previous constant.
    pub fn mass_at(&self, a: F, panels: usize, hint: Option<F>) -> Result<(F, F)> {
        let c = self.solve_constant_on(a, panels, hint)?;
        Ok((self.mass_parts(a, c, panels)?, c))
    }

    /// Total probability mass Pi(a) of the candidate with support [a, R1];
    /// strictly decreasing in a.
    pub fn mass(&self, a: F) -> Result<F> {
        Ok(self.mass_at(a, self.opts.panels, None)?.0)
    }

    /// Whether the construction is defined at support radius a (admissible
    /// flux constant exists and the mismatch changes sign).
    pub fn workable_mass(&self, a: F) -> Result<Option<F>> {
        match self.mass_at(a, self.opts.coarse_panels, None) {
            Ok((m, _)) => Ok(Some(m)),
            Err(
                SolverError::Infeasible(_)
                | SolverError::NoRoot(_)
                | SolverError::FluxExceedsBound { .. },
            ) => Ok(None),
            Err(e) => Err(e),
        }
    }

    /// Inner support radius p* with Pi(p*) = 1, by bisection with a nested
    /// constant solve per evaluation.
    pub fn solve_support(&self) -> Result<SupportSolve<F>> {
        let r1 = self.spec.r_outer;
        let r2 = self.spec.r_inner;
        let span = r1 - r2;
        let delta = lit::<F>(1e-6) * span;
        let mut iterations = 0usize;
        let mut history: Vec<(f64, f64)> = Vec::new();

        // Locate the left end of the domain where the construction is
        // defined: the flux-feasibility region is an interval abutting R1.
        let first = r2 + delta;
        let mut lo_a;
        let mut lo_mass;
        match self.workable_mass(first)? {
            Some(m) => {
                lo_a = first;
                lo_mass = m;
            }
            None => {
                let scan = 128usize;
                let mut found = None;
                for k in 1..scan {
                    let a = r2 + span * lit_usize::<F>(k) / lit_usize::<F>(scan);
                    iterations += 1;
                    if let Some(m) = self.workable_mass(a)? {
                        found = Some((a, m, r2 + span * lit_usize::<F>(k - 1) / lit_usize::<F>(scan)));
                        break;
                    }
                }
                let (mut a_ok, mut m_ok, mut a_bad) = found.ok_or_else(|| {
                    SolverError::Infeasible(format!(
                        "construction undefined for every support radius in ({}, {}): alpha = {} too small",
                        r2, r1, self.spec.alpha
                    ))
                })?;
                // Push the workable point toward the feasibility frontier so
                // the maximum reachable mass is probed.
                for _ in 0..24 {
                    if a_ok - a_bad <= delta {
                        break;
                    }
                    let mid = (a_ok + a_bad) * lit::<F>(0.5);
                    iterations += 1;
                    match self.workable_mass(mid)? {
                        Some(m) => {
                            a_ok = mid;
                            m_ok = m;
                        }
                        None => a_bad = mid,
                    }
                }
                lo_a = a_ok;
                lo_mass = m_ok;
            }
        }
        if lo_mass <= F::one() {
            return Err(SolverError::InsufficientOuterRadius(format!(
                "maximum reachable mass {} at support radius {} does not exceed 1 \
                 (outer radius too small relative to inner radius, alpha and n)",
                lo_mass, lo_a
            )));
        }

        // Right end: mass tends to 0 as the support shrinks.
        let mut hi_a = r1 - span / lit::<F>(1024.0);
        let mut hi_mass = loop {
            iterations += 1;
            match self.workable_mass(hi_a)? {
                Some(m) if m < F::one() => break m,
                Some(_) => {
                    hi_a = (hi_a + r1) * lit::<F>(0.5);
                }
                None => {
                    return Err(SolverError::NoRoot(format!(
                        "construction undefined near the outer radius (a = {})",
                        hi_a
                    )))
                }
            }
        };

        // Coarse bisection on the coarse-grid mass.
        let coarse_tol = lit::<F>(1e-6) * span;
        while hi_a - lo_a > coarse_tol {
            let mid = (lo_a + hi_a) * lit::<F>(0.5);
            iterations += 1;
            match self.workable_mass(mid)? {
                Some(m) => {
                    if m > F::one() {
                        lo_a = mid;
                        lo_mass = m;
                    } else {
                        hi_a = mid;
                        hi_mass = m;
                    }
                }
                None => {
                    // Undefined pockets can only sit on the inner side.
                    lo_a = mid;
                }
            }
        }
        let _ = (lo_mass, hi_mass);

        // Fine stage around the coarse root, warm-starting each nested
        // constant solve from the previous one.
        let fine_tol = lit::<F>(self.opts.support_tol_rel) * span;
        let mut w = lit::<F>(4.0) * coarse_tol;
        let center = (lo_a + hi_a) * lit::<F>(0.5);
        let mut c_hint: Option<F> = None;
        let p_star = loop {
            let lo = (center - w).max(r2 + delta);
            let hi = (center + w).min(r1 - delta);
            let attempt = solve_bracketed(
                |a| {
                    iterations += 1;
                    let (m, c) = self.mass_at(a, self.opts.panels, c_hint)?;
                    c_hint = Some(c);
                    history.push((
                        a.to_f64().unwrap_or(f64::NAN),
                        m.to_f64().unwrap_or(f64::NAN),
                    ));
                    Ok(m - F::one())
                },
                lo,
                hi,
                fine_tol,
                10,
                "support radius",
            );
            match attempt {
                Ok(a) => break a,
                Err(SolverError::NoRoot(_)) if w < span => {
                    w = w * lit::<F>(4.0);
                }
                Err(e) => return Err(e),
            }
        };
        let c = self.solve_constant(p_star)?;
        Ok(SupportSolve {
            p_star,
            c_at_p_star: c,
            iterations,
            history,
        })
    }

    /// The full solution profile on a uniform grid over [p*, R1], with one
    /// moment halving check that doubles the grid when it fails.
    pub fn build_density(&self) -> Result<SolutionProfile<F>> {
        let support = self.solve_support()?;
        self.profile_at(support.p_star, support.c_at_p_star)
    }

    /// Assemble the profile for a known (p*, C) pair.
    pub fn profile_at(&self, p_star: F, c: F) -> Result<SolutionProfile<F>> {
        let mut panels = self.opts.panels;
        let m_full = self.moment_parts(p_star, c, panels)?;
        let m_half = self.moment_parts(p_star, c, panels / 2)?;
        if (m_full - m_half).abs() > lit::<F>(self.opts.richardson_tol) {
            panels *= 2;
        }
        let fields = self.density_on(p_star, c, panels)?;
        Ok(SolutionProfile {
            epsilon: self.spec.epsilon,
            c_const: c,
            p_star,
            lambda: fields.xi.iter().map(|&t| t.exp()).collect(),
            grid: fields.grid,
            u: fields.u,
            du: fields.du,
            theta: fields.theta,
            xi: fields.xi,
        })
    }

    /// The eps -> 0 limit: a symmetric tent with slopes +alpha/-alpha,
    /// apex at the support midpoint, inner radius fixed by unit mass.
    pub fn tent_limit(&self) -> Result<TentProfile<F>> {
        tent_limit(&self.spec)
    }
}

/// Composite Simpson of a fallible function with `panels` uniform panels
/// (any positive count; odd counts get one extra panel).
fn composite_simpson_fn<F: Real>(
    f: &dyn Fn(F) -> Result<F>,
    lo: F,
    hi: F,
    panels: usize,
) -> Result<F> {
    let panels = if panels.is_multiple_of(2) { panels.max(2) } else { panels + 1 };
    let h = (hi - lo) / lit_usize::<F>(panels);
    let four = lit::<F>(4.0);
    let mut acc = f(lo)? + f(hi)?;
    for i in 1..panels {
        let x = lo + h * lit_usize::<F>(i);
        let w = if i % 2 == 1 { four } else { lit::<F>(2.0) };
        acc = acc + w * f(x)?;
    }
    Ok(acc * h / lit::<F>(3.0))
}

struct DensityFields<F: Real> {
    grid: RadialGrid<F>,
    u: Vec<F>,
    du: Vec<F>,
    xi: Vec<F>,
    theta: Vec<F>,
}

/// int_lo^hi r^k dr for real k (monomial primitive; k = -1 does not occur
/// here since k >= 0 throughout).
fn monomial_integral<F: Real>(lo: F, hi: F, k: F) -> F {
    let kp1 = k + F::one();
    (hi.powf(kp1) - lo.powf(kp1)) / kp1
}

/// Exact mass of the tent with inner radius a on [a, R1]:
/// omega int_a^{R1} r^{n-1} alpha min(r - a, R1 - r) dr, piecewise monomial.
pub fn tent_mass<F: Real>(spec: &ProblemSpec<F>, a: F) -> F {
    let r1 = spec.r_outer;
    let m = (a + r1) * lit::<F>(0.5);
    let n = lit_usize::<F>(spec.n as usize);
    let nm1 = n - F::one();
    let left = monomial_integral(a, m, n) - a * monomial_integral(a, m, nm1);
    let right = r1 * monomial_integral(m, r1, nm1) - monomial_integral(m, r1, n);
    spec.surface_area() * spec.alpha * (left + right)
}

/// Payoff moment of a tent (exact monomials for the power payoff,
/// quadrature on each linear piece otherwise).
pub fn tent_moment<F: Real>(spec: &ProblemSpec<F>, tent: &TentProfile<F>) -> Result<F> {
    let (a, m, r1) = (tent.a, tent.m, spec.r_outer);
    let n = lit_usize::<F>(spec.n as usize);
    match &spec.payoff {
        PayoffFunction::Power { p } => {
            let k = n - F::one() + *p;
            let left = monomial_integral(a, m, k + F::one()) - a * monomial_integral(a, m, k);
            let right = r1 * monomial_integral(m, r1, k) - monomial_integral(m, r1, k + F::one());
            Ok(spec.surface_area() * spec.alpha * (left + right))
        }
        PayoffFunction::Custom { .. } => {
            let mut acc = F::zero();
            for (lo, hi) in [(a, m), (m, r1)] {
                let grid = RadialGrid::uniform(lo, hi, 2048)?;
                let vals: Vec<F> = grid
                    .nodes()
                    .iter()
                    .map(|&r| spec.radial_weight(r) * spec.payoff.eval(r) * tent.eval(r))
                    .collect();
                acc = acc + simpson_samples(&vals, grid.spacing())?;
            }
            Ok(spec.surface_area() * acc)
        }
    }
}

/// Tent with unit mass: inner radius a solved from tent_mass(a) = 1
/// (strictly decreasing in a). Errors with InsufficientOuterRadius when
/// even the widest tent cannot reach unit mass.
pub fn tent_limit<F: Real>(spec: &ProblemSpec<F>) -> Result<TentProfile<F>> {
    let spec = validate_spec(spec.clone())?;
    let full = tent_mass(&spec, spec.r_inner);
    if full <= F::one() {
        return Err(SolverError::InsufficientOuterRadius(format!(
            "maximum feasible mass {} on the annulus does not exceed 1",
            full
        )));
    }
    let span = spec.r_outer - spec.r_inner;
    let tol = lit::<F>(1e-13) * span;
    let a = solve_bracketed(
        |a| Ok(tent_mass(&spec, a) - F::one()),
        spec.r_inner,
        spec.r_outer - tol,
        tol,
        10,
        "tent inner radius",
    )?;
    Ok(TentProfile {
        a,
        m: (a + spec.r_outer) * lit::<F>(0.5),
        h: spec.alpha * (spec.r_outer - a) * lit::<F>(0.5),
        alpha: spec.alpha,
        r_outer: spec.r_outer,
    })
}
