//! Radially symmetric optimal-density solver on an annulus.
//!
//! Constructs the probability density maximizing the payoff moment
//! subject to a gradient bound, via a regularized dual construction
//! (flux field + dual algebraic equation), verifies it through energy
//! functionals and residuals, and cross-checks it against an independent
//! discretized linear program.
//!
//! The numerical core is generic over the scalar type through
//! [`scalar::Real`]; concrete `f64` aliases live at the crate root.

// Validation uses negated comparisons (`!(x > 0)`) on purpose: they
// reject NaN along with the out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod dae;
pub mod energetics;
pub mod error;
pub mod io;
pub mod model;
pub mod oracle;
pub mod quad;
pub(crate) mod rootfind;
pub mod scalar;
pub mod simplex;
pub mod solver;
pub mod verify;

pub use config::{PayoffConfig, RunConfig, Tolerances};
pub use error::{Result, SolverError};
pub use model::{
    sphere_surface_area, validate_spec, ConstraintReport, EnergyReport, OracleResult,
    OracleStatus, PayoffFunction, ProblemSpec, RadialGrid, ResidualBundle, SolutionProfile,
    TentProfile,
};
pub use oracle::{compare, lp_maximize, max_feasible_mass, ComparisonReport};
pub use scalar::Real;
pub use solver::{tent_limit, tent_mass, tent_moment, RadialSolver, SolverOptions, SupportSolve};
pub use verify::{run_verification, VerifyCheck, VerifyReport};

/// f64 instantiations of the core types (the default precision).
pub type Spec = ProblemSpec<f64>;
pub type Payoff = PayoffFunction<f64>;
pub type Grid = RadialGrid<f64>;
pub type Profile = SolutionProfile<f64>;
pub type Tent = TentProfile<f64>;
pub type Solver = RadialSolver<f64>;
pub type Oracle = OracleResult<f64>;
