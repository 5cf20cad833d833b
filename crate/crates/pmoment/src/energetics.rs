//! Energy functionals and residual diagnostics evaluated on sampled
//! profiles: primal energy, total complementary energy, dual energy,
//! Euler-Lagrange / constitutive residuals, constraint checks and the
//! second variational forms. Everything here works from the profile
//! samples alone (no re-solving), so it doubles as the independent
//! verification path for externally supplied CSV profiles.

use rand::SeedableRng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::Result;
use crate::model::{ConstraintReport, EnergyReport, ProblemSpec, ResidualBundle, SolutionProfile};
use crate::quad::simpson_samples;
use crate::scalar::{lit, lit_usize, Real};

fn weighted_integral<F: Real>(
    spec: &ProblemSpec<F>,
    profile: &SolutionProfile<F>,
    f: impl Fn(usize, F) -> F,
) -> Result<F> {
    let vals: Vec<F> = profile
        .grid
        .nodes()
        .iter()
        .enumerate()
        .map(|(i, &r)| spec.radial_weight(r) * f(i, r))
        .collect();
    Ok(spec.surface_area() * simpson_samples(&vals, profile.grid.spacing())?)
}

/// Payoff moment of the sampled density, omega * int w g u dr.
pub fn moment<F: Real>(spec: &ProblemSpec<F>, profile: &SolutionProfile<F>) -> Result<F> {
    weighted_integral(spec, profile, |i, r| spec.payoff.eval(r) * profile.u[i])
}

/// Total mass of the sampled density.
pub fn mass<F: Real>(spec: &ProblemSpec<F>, profile: &SolutionProfile<F>) -> Result<F> {
    weighted_integral(spec, profile, |i, _| profile.u[i])
}

/// Primal energy I = int H(grad u) - g u dy with
/// H(gamma) = eps e^{(|gamma|^2 - alpha^2)/(2 eps)}, returned both over
/// the support [p*, R1] and over the full annulus (outside the support
/// u = 0, so H contributes the constant eps e^{-alpha^2/(2 eps)}).
pub fn primal_energy<F: Real>(
    spec: &ProblemSpec<F>,
    profile: &SolutionProfile<F>,
) -> Result<(F, F)> {
    let eps = profile.epsilon;
    let two_eps = lit::<F>(2.0) * eps;
    let asq = spec.alpha * spec.alpha;
    let support = weighted_integral(spec, profile, |i, r| {
        let du = profile.du[i];
        let h = eps * ((du * du - asq) / two_eps).exp();
        h - spec.payoff.eval(r) * profile.u[i]
    })?;
    let n = lit_usize::<F>(spec.n as usize);
    let support_vol = spec.surface_area()
        * (spec.r_outer.powi(spec.n as i32) - profile.p_star.powi(spec.n as i32))
        / n;
    let exterior = eps * (-asq / two_eps).exp() * (spec.annulus_volume() - support_vol);
    Ok((support, support + exterior))
}

/// Total complementary energy Xi(u, zeta) over the support, with
/// zeta = eps e^xi: int [Phi(u) zeta - Psi*(zeta) - g u] dy,
/// Phi(u) = (|grad u|^2 - alpha^2)/(2 eps), Psi*(zeta) = zeta (ln(zeta/eps) - 1).
pub fn total_complementary<F: Real>(
    spec: &ProblemSpec<F>,
    profile: &SolutionProfile<F>,
) -> Result<F> {
    let eps = profile.epsilon;
    let two_eps = lit::<F>(2.0) * eps;
    let asq = spec.alpha * spec.alpha;
    weighted_integral(spec, profile, |i, r| {
        let du = profile.du[i];
        let phi = (du * du - asq) / two_eps;
        let zeta = eps * profile.xi[i].exp();
        // Phi zeta - zeta (xi - 1) = zeta (Phi - xi + 1)
        zeta * (phi - profile.xi[i] + F::one()) - spec.payoff.eval(r) * profile.u[i]
    })
}

/// Dual energy over the support:
/// I_d = -1/2 int (eps |theta|^2 / zeta + alpha^2 zeta / eps
///                 + 2 zeta (ln(zeta/eps) - 1)) dy, zeta = eps e^xi.
/// The theta term is evaluated as exp(2 ln theta - xi) to survive the
/// small-multiplier region (theta = 0 contributes zero).
pub fn dual_energy<F: Real>(spec: &ProblemSpec<F>, profile: &SolutionProfile<F>) -> Result<F> {
    let eps = profile.epsilon;
    let asq = spec.alpha * spec.alpha;
    let half = lit::<F>(0.5);
    let v = weighted_integral(spec, profile, |i, _| {
        let xi = profile.xi[i];
        let theta = profile.theta[i];
        let flux_term = if theta > F::zero() {
            (lit::<F>(2.0) * theta.ln() - xi).exp()
        } else {
            F::zero()
        };
        let zeta = eps * xi.exp();
        flux_term + asq * zeta / eps + lit::<F>(2.0) * zeta * (xi - F::one())
    })?;
    Ok(-half * v)
}

/// Sup-norm relative residual of the radial Euler-Lagrange equation
/// (w e^{Phi} u')' + w g = 0, w = r^{n-1}, via central differences of the
/// sampled flux s = w e^{Phi} u'.
pub fn el_residual<F: Real>(spec: &ProblemSpec<F>, profile: &SolutionProfile<F>) -> Result<F> {
    let eps = profile.epsilon;
    let two_eps = lit::<F>(2.0) * eps;
    let asq = spec.alpha * spec.alpha;
    let nodes = profile.grid.nodes();
    let h = profile.grid.spacing();
    let s: Vec<F> = nodes
        .iter()
        .enumerate()
        .map(|(i, &r)| {
            let du = profile.du[i];
            spec.radial_weight(r) * ((du * du - asq) / two_eps).exp() * du
        })
        .collect();
    let mut worst = F::zero();
    let mut scale = F::zero();
    for (i, &r) in nodes.iter().enumerate().skip(1).take(nodes.len() - 2) {
        let rhs = spec.radial_weight(r) * spec.payoff.eval(r);
        let resid = (s[i + 1] - s[i - 1]) / (lit::<F>(2.0) * h) + rhs;
        worst = worst.max(resid.abs());
        scale = scale.max(rhs.abs());
    }
    Ok(worst / scale.max(F::one()))
}

/// Sup-norm residual of the constitutive law
/// (|grad u|^2 - alpha^2)/(2 eps) = ln lambda.
pub fn constitutive_residual<F: Real>(
    spec: &ProblemSpec<F>,
    profile: &SolutionProfile<F>,
) -> Result<F> {
    let two_eps = lit::<F>(2.0) * profile.epsilon;
    let asq = spec.alpha * spec.alpha;
    let mut worst = F::zero();
    for i in 0..profile.u.len() {
        let du = profile.du[i];
        let resid = (du * du - asq) / two_eps - profile.xi[i];
        worst = worst.max(resid.abs());
    }
    Ok(worst)
}

/// Constraint residuals of the sampled density (no dual fields).
pub fn constraint_report<F: Real>(
    spec: &ProblemSpec<F>,
    profile: &SolutionProfile<F>,
) -> Result<ConstraintReport<F>> {
    let min_u = profile
        .u
        .iter()
        .cloned()
        .fold(F::infinity(), |m, v| m.min(v));
    let max_du = profile.du.iter().fold(F::zero(), |m, d| m.max(d.abs()));
    Ok(ConstraintReport {
        boundary_inner: profile.u[0].abs(),
        boundary_outer: profile.u.last().unwrap().abs(),
        min_u,
        normalization: (mass(spec, profile)? - F::one()).abs(),
        gradient_excess: (max_du - spec.alpha).max(F::zero()),
    })
}

/// Radial test function vanishing at both support endpoints: a seeded
/// random sine series with at most 16 modes and closed-form derivative.
#[derive(Clone, Debug)]
pub struct TestFunction<F: Real> {
    lo: F,
    span: F,
    coeffs: Vec<F>,
}

impl<F: Real> TestFunction<F> {
    pub fn seeded(lo: F, hi: F, seed: u64) -> Self {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let modes = 1 + (seed as usize % 16);
        let coeffs: Vec<F> = (0..modes)
            .map(|_| lit::<F>(<StandardNormal as Distribution<f64>>::sample(&StandardNormal, &mut rng)))
            .collect();
        TestFunction {
            lo,
            span: hi - lo,
            coeffs,
        }
    }

    pub fn eval(&self, r: F) -> F {
        let x = (r - self.lo) / self.span * lit::<F>(std::f64::consts::PI);
        self.coeffs
            .iter()
            .enumerate()
            .map(|(k, &a)| a * (x * lit_usize::<F>(k + 1)).sin())
            .sum()
    }

    pub fn deriv(&self, r: F) -> F {
        let pi_l = lit::<F>(std::f64::consts::PI) / self.span;
        let x = (r - self.lo) * pi_l;
        self.coeffs
            .iter()
            .enumerate()
            .map(|(k, &a)| {
                let kf = lit_usize::<F>(k + 1);
                a * kf * pi_l * (x * kf).cos()
            })
            .sum()
    }
}

/// Primal second variation at the profile in direction v:
/// int e^{Phi} (|v'|^2 + (u' v')^2 / eps) dy  (>= 0).
pub fn second_variation_primal<F: Real>(
    spec: &ProblemSpec<F>,
    profile: &SolutionProfile<F>,
    v: &TestFunction<F>,
) -> Result<F> {
    let eps = profile.epsilon;
    let two_eps = lit::<F>(2.0) * eps;
    let asq = spec.alpha * spec.alpha;
    weighted_integral(spec, profile, |i, r| {
        let du = profile.du[i];
        let dv = v.deriv(r);
        let expo = ((du * du - asq) / two_eps).exp();
        expo * (dv * dv + (du * dv) * (du * dv) / eps)
    })
}

/// Dual second variation at the profile in direction eta:
/// -int (eps |theta|^2 / zeta^3 + 1 / zeta) eta^2 dy  (<= 0).
/// Both coefficients are evaluated in the log domain so the
/// small-multiplier region neither overflows nor produces 0 * inf.
pub fn second_variation_dual<F: Real>(
    spec: &ProblemSpec<F>,
    profile: &SolutionProfile<F>,
    eta: &TestFunction<F>,
) -> Result<F> {
    let eps = profile.epsilon;
    let v = weighted_integral(spec, profile, |i, r| {
        let xi = profile.xi[i];
        let theta = profile.theta[i];
        let e = eta.eval(r);
        let flux = if theta > F::zero() {
            (lit::<F>(2.0) * theta.ln() - lit::<F>(3.0) * xi).exp() / (eps * eps)
        } else {
            F::zero()
        };
        (flux + (-xi).exp() / eps) * e * e
    })?;
    Ok(-v)
}

/// Full energy/residual report for one profile.
pub fn energy_report<F: Real>(
    spec: &ProblemSpec<F>,
    profile: &SolutionProfile<F>,
) -> Result<EnergyReport> {
    let (primal_support, primal_full) = primal_energy(spec, profile)?;
    let xi_energy = total_complementary(spec, profile)?;
    let dual = dual_energy(spec, profile)?;
    let cons = constraint_report(spec, profile)?;
    let f = |x: F| x.to_f64().unwrap_or(f64::NAN);
    let gap = (primal_support - dual).abs() / primal_support.abs().max(F::one());
    Ok(EnergyReport {
        epsilon: f(profile.epsilon),
        c_const: f(profile.c_const),
        p_star: f(profile.p_star),
        moment: f(moment(spec, profile)?),
        primal_energy_support: f(primal_support),
        primal_energy_full: f(primal_full),
        xi_energy: f(xi_energy),
        dual_energy: f(dual),
        duality_gap_rel: f(gap),
        residuals: ResidualBundle {
            el: f(el_residual(spec, profile)?),
            constitutive: f(constitutive_residual(spec, profile)?),
            normalization: f(cons.normalization),
            boundary: f(cons.boundary_inner.max(cons.boundary_outer)),
            gradient_excess: f(cons.gradient_excess),
        },
    })
}

/// Negative control: scale the density (u and u' together, as a real
/// perturbation of the primal field would).
pub fn corrupt_density<F: Real>(profile: &SolutionProfile<F>, factor: F) -> SolutionProfile<F> {
    let mut p = profile.clone();
    for v in &mut p.u {
        *v = *v * factor;
    }
    for v in &mut p.du {
        *v = *v * factor;
    }
    p
}

/// Negative control: scale the dual multiplier, keeping the flux; xi is
/// shifted consistently with lambda.
pub fn corrupt_multiplier<F: Real>(profile: &SolutionProfile<F>, factor: F) -> SolutionProfile<F> {
    let mut p = profile.clone();
    for v in &mut p.lambda {
        *v = *v * factor;
    }
    let shift = factor.ln();
    for v in &mut p.xi {
        *v = *v + shift;
    }
    p
}
