//! Composite-Simpson quadrature on uniform grids, plus the cumulative
//! variant that returns the running integral at every node. All radial
//! integrals in the crate go through these two routines; callers own the
//! dimensional factor (surface measure) themselves.

use crate::error::{Result, SolverError};
use crate::model::RadialGrid;
use crate::scalar::{lit, Real};

/// Composite Simpson over uniformly spaced samples. `h` is the node
/// spacing; the sample count must be odd (even panel count).
pub fn simpson_samples<F: Real>(values: &[F], h: F) -> Result<F> {
    let n = values.len();
    if n < 3 || n.is_multiple_of(2) {
        return Err(SolverError::BadConfig(format!(
            "Simpson needs an even panel count, got {} nodes",
            n
        )));
    }
    let mut acc = F::zero();
    let four = lit::<F>(4.0);
    for k in (0..n - 2).step_by(2) {
        acc = acc + values[k] + four * values[k + 1] + values[k + 2];
    }
    Ok(acc * h / lit(3.0))
}

/// Running integral at every node. Even nodes agree with plain composite
/// Simpson exactly; odd nodes use the 5/12, 8/12, -1/12 end rule over the
/// enclosing panel pair, so the scheme stays third order locally and
/// fourth order at panel boundaries.
pub fn simpson_cumulative<F: Real>(values: &[F], h: F) -> Result<Vec<F>> {
    let n = values.len();
    if n < 3 || n.is_multiple_of(2) {
        return Err(SolverError::BadConfig(format!(
            "Simpson needs an even panel count, got {} nodes",
            n
        )));
    }
    let mut out = vec![F::zero(); n];
    let third = h / lit(3.0);
    let twelfth = h / lit(12.0);
    let four = lit::<F>(4.0);
    let five = lit::<F>(5.0);
    let eight = lit::<F>(8.0);
    for k in (0..n - 2).step_by(2) {
        let (f0, f1, f2) = (values[k], values[k + 1], values[k + 2]);
        out[k + 1] = out[k] + twelfth * (five * f0 + eight * f1 - f2);
        out[k + 2] = out[k] + third * (f0 + four * f1 + f2);
    }
    Ok(out)
}

/// Composite Simpson of a function over the span of `grid`.
pub fn radial_integral<F: Real>(f: impl Fn(F) -> F, grid: &RadialGrid<F>) -> Result<F> {
    let values: Vec<F> = grid.nodes().iter().map(|&r| f(r)).collect();
    simpson_samples(&values, grid.spacing())
}

/// Cumulative variant of [`radial_integral`]: running integral from the
/// grid's left endpoint to every node.
pub fn radial_integral_cumulative<F: Real>(
    f: impl Fn(F) -> F,
    grid: &RadialGrid<F>,
) -> Result<Vec<F>> {
    let values: Vec<F> = grid.nodes().iter().map(|&r| f(r)).collect();
    simpson_cumulative(&values, grid.spacing())
}
