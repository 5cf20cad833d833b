//! Threshold verification of a profile: every constraint, equation
//! residual, energy identity and variational sign condition, with one
//! named check per criterion.

use serde::{Deserialize, Serialize};

use crate::energetics::{
    self, constraint_report, second_variation_dual, second_variation_primal, TestFunction,
};
use crate::error::Result;
use crate::model::{EnergyReport, ProblemSpec, SolutionProfile};

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct VerifyCheck {
    pub name: String,
    /// Violation magnitude; the check passes when value <= threshold.
    pub value: f64,
    pub threshold: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct VerifyReport {
    pub report: EnergyReport,
    pub min_u: f64,
    pub second_variation_primal_min: f64,
    pub second_variation_dual_max: f64,
    pub checks: Vec<VerifyCheck>,
    pub all_pass: bool,
}

/// Number of seeded test functions probed by the variational checks.
pub const TEST_FUNCTIONS: u64 = 100;

/// Run the complete verification. `gap_tol` bounds the relative
/// primal-dual gap; every other threshold is fixed by the contract of
/// the construction.
pub fn run_verification(
    spec: &ProblemSpec<f64>,
    profile: &SolutionProfile<f64>,
    gap_tol: f64,
    seed: u64,
) -> Result<VerifyReport> {
    let report = energetics::energy_report(spec, profile)?;
    let cons = constraint_report(spec, profile)?;

    let mut sv_primal_min = f64::INFINITY;
    let mut sv_dual_max = f64::NEG_INFINITY;
    for k in 0..TEST_FUNCTIONS {
        let tf = TestFunction::seeded(profile.p_star, spec.r_outer, seed.wrapping_add(k));
        sv_primal_min = sv_primal_min.min(second_variation_primal(spec, profile, &tf)?);
        sv_dual_max = sv_dual_max.max(second_variation_dual(spec, profile, &tf)?);
    }

    let primal_scale = report.primal_energy_support.abs().max(1.0);
    let xi_gap_rel = (report.primal_energy_support - report.xi_energy).abs() / primal_scale;

    let mut checks = Vec::new();
    let mut push = |name: &str, value: f64, threshold: f64| {
        checks.push(VerifyCheck {
            name: name.to_string(),
            value,
            threshold,
            pass: value <= threshold,
        });
    };
    push("boundary", report.residuals.boundary, 1e-8);
    push("negativity", (-cons.min_u).max(0.0), 1e-12);
    push("normalization", report.residuals.normalization, 1e-6);
    push("gradient_excess", report.residuals.gradient_excess, 1e-12);
    push("euler_lagrange", report.residuals.el, 1e-6);
    push("constitutive", report.residuals.constitutive, 1e-10);
    push("xi_gap_rel", xi_gap_rel, 1e-12);
    push("duality_gap_rel", report.duality_gap_rel, gap_tol);
    push(
        "second_variation_primal_deficit",
        (-sv_primal_min).max(0.0),
        1e-10,
    );
    push(
        "second_variation_dual_excess",
        sv_dual_max.max(0.0),
        1e-10,
    );
    let all_pass = checks.iter().all(|c| c.pass);
    Ok(VerifyReport {
        report,
        min_u: cons.min_u,
        second_variation_primal_min: sv_primal_min,
        second_variation_dual_max: sv_dual_max,
        checks,
        all_pass,
    })
}
