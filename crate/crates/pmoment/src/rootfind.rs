//! Safeguarded scalar root finding used by the nested solves. Bisection
//! does the heavy lifting (the functions involved have logarithmic
//! singularities at bracket endpoints where derivative methods diverge);
//! a short bracket-clamped secant polish then pushes the residual toward
//! machine level.

use crate::error::{Result, SolverError};
use crate::scalar::{lit, Real};

/// Root of a strictly monotone function on [lo, hi]. Requires a sign
/// change across the bracket. Bisection to `x_tol`, then up to
/// `polish_iters` secant steps kept inside the shrinking bracket.
pub(crate) fn solve_bracketed<F: Real>(
    mut f: impl FnMut(F) -> Result<F>,
    mut lo: F,
    mut hi: F,
    x_tol: F,
    polish_iters: usize,
    what: &str,
) -> Result<F> {
    let mut flo = f(lo)?;
    let mut fhi = f(hi)?;
    if flo == F::zero() {
        return Ok(lo);
    }
    if fhi == F::zero() {
        return Ok(hi);
    }
    if (flo > F::zero()) == (fhi > F::zero()) {
        return Err(SolverError::NoRoot(format!(
            "{}: no sign change on [{}, {}] (f = {}, {})",
            what, lo, hi, flo, fhi
        )));
    }
    let half = lit::<F>(0.5);
    let mut guard = 0usize;
    while hi - lo > x_tol {
        let mid = (lo + hi) * half;
        if mid <= lo || mid >= hi {
            break; // spacing exhausted
        }
        let fmid = f(mid)?;
        if fmid == F::zero() {
            return Ok(mid);
        }
        if (fmid > F::zero()) == (flo > F::zero()) {
            lo = mid;
            flo = fmid;
        } else {
            hi = mid;
            fhi = fmid;
        }
        guard += 1;
        if guard > 200 {
            break;
        }
    }
    // Secant polish, clamped to the bracket.
    let mut x0 = lo;
    let mut f0 = flo;
    let mut x1 = hi;
    let mut f1 = fhi;
    let mut best = if f0.abs() < f1.abs() { x0 } else { x1 };
    let mut best_f = f0.abs().min(f1.abs());
    for _ in 0..polish_iters {
        let denom = f1 - f0;
        if denom == F::zero() {
            break;
        }
        let x2 = x1 - f1 * (x1 - x0) / denom;
        if !(x2 > lo) || !(x2 < hi) {
            break;
        }
        let f2 = f(x2)?;
        if f2.abs() < best_f {
            best_f = f2.abs();
            best = x2;
        }
        if f2 == F::zero() {
            return Ok(x2);
        }
        if (f2 > F::zero()) == (flo > F::zero()) {
            lo = x2;
            flo = f2;
        } else {
            hi = x2;
        }
        x0 = x1;
        f0 = f1;
        x1 = x2;
        f1 = f2;
    }
    Ok(best)
}
