//! The dual algebraic equation E(lambda) = |theta|^2 with
//! E(lambda) = lambda^2 (alpha^2 + 2 eps ln lambda), restricted to
//! lambda in [e^{-alpha^2/(2 eps)}, 1] where E increases from 0 to alpha^2.
//!
//! Everything runs in the log domain t = ln lambda: the lower endpoint
//! e^{-alpha^2/(2 eps)} underflows f64 for small eps while t = -alpha^2/(2 eps)
//! stays benign.

use crate::error::{Result, SolverError};
use crate::scalar::{lit, Real};

#[derive(Clone, Copy, Debug)]
pub struct DaeParams<F: Real> {
    pub alpha: F,
    pub epsilon: F,
    /// ln of the smallest admissible lambda, -alpha^2 / (2 eps).
    pub t_min: F,
}

impl<F: Real> DaeParams<F> {
    pub fn new(alpha: F, epsilon: F) -> Result<Self> {
        if !(alpha > F::zero()) || !(epsilon > F::zero()) {
            return Err(SolverError::BadConfig(format!(
                "DAE parameters must be positive, got alpha = {}, epsilon = {}",
                alpha, epsilon
            )));
        }
        Ok(DaeParams {
            alpha,
            epsilon,
            t_min: -alpha * alpha / (lit::<F>(2.0) * epsilon),
        })
    }

    fn alpha_sq(&self) -> F {
        self.alpha * self.alpha
    }

    fn check_t(&self, t: F) -> Result<()> {
        // Tiny slack for round-off in ln(lambda) at the endpoints.
        let slack = lit::<F>(1e-12) * (F::one() - self.t_min).abs();
        if t < self.t_min - slack || t > slack {
            return Err(SolverError::DomainError(format!(
                "log-multiplier t = {} outside admissible range [{}, 0]",
                t, self.t_min
            )));
        }
        Ok(())
    }
}

/// E evaluated at t = ln lambda: exp(2t) (alpha^2 + 2 eps t).
pub fn e_forward_t<F: Real>(t: F, params: &DaeParams<F>) -> Result<F> {
    params.check_t(t)?;
    let t = t.max(params.t_min).min(F::zero());
    let bracket = params.alpha_sq() + lit::<F>(2.0) * params.epsilon * t;
    Ok((lit::<F>(2.0) * t).exp() * bracket.max(F::zero()))
}

/// E(lambda) = |theta|^2 in [0, alpha^2].
pub fn e_forward<F: Real>(lambda: F, params: &DaeParams<F>) -> Result<F> {
    if !(lambda > F::zero()) {
        return Err(SolverError::DomainError(format!(
            "lambda must be positive, got {}",
            lambda
        )));
    }
    e_forward_t(lambda.ln(), params)
}

/// Inverse of E in the log domain: the unique t in [t_min, 0] with
/// exp(2t) (alpha^2 + 2 eps t) = q, by bisection on the monotone equation
/// 2t + ln(alpha^2 + 2 eps t) = ln q. Absolute tolerance 1e-13 in t.
pub fn e_invert_t<F: Real>(q: F, params: &DaeParams<F>) -> Result<F> {
    let asq = params.alpha_sq();
    if q < F::zero() {
        return Err(SolverError::DomainError(format!(
            "flux magnitude squared must be nonnegative, got {}",
            q
        )));
    }
    if q > asq * (F::one() + lit::<F>(1e-12)) {
        return Err(SolverError::FluxExceedsBound {
            q: q.to_f64().unwrap_or(f64::NAN),
            limit: asq.to_f64().unwrap_or(f64::NAN),
        });
    }
    if q == F::zero() {
        return Ok(params.t_min);
    }
    if q >= asq {
        // Root-finders probing bracket endpoints can overshoot alpha^2 by
        // round-off; clamp to the exact upper endpoint.
        return Ok(F::zero());
    }
    let ln_q = q.ln();
    let two = lit::<F>(2.0);
    let h = |t: F| {
        let bracket = asq + two * params.epsilon * t;
        if bracket <= F::zero() {
            F::neg_infinity()
        } else {
            two * t + bracket.ln() - ln_q
        }
    };
    // Rigorous pre-shrink of the bracket before bisecting: the root
    // satisfies t = T(t) with T(t) = (ln q - ln(alpha^2 + 2 eps t)) / 2,
    // and T is decreasing, so lo <= t* <= T(lo) and T(hi) <= t* once
    // lo <= t* <= hi. Start from lo = (ln q - ln alpha^2)/2 <= t*.
    let half = lit::<F>(0.5);
    let tmap = |t: F| {
        let bracket = asq + two * params.epsilon * t;
        if bracket > F::zero() {
            (ln_q - bracket.ln()) * half
        } else {
            F::zero()
        }
    };
    let mut lo = ((ln_q - asq.ln()) * half).max(params.t_min);
    let mut hi = tmap(lo).min(F::zero());
    lo = tmap(hi).max(lo);
    hi = tmap(lo).min(hi);
    // h(lo) <= 0 <= h(hi); h strictly increasing.
    let tol = lit::<F>(1e-13);
    while hi - lo > tol {
        let mid = (lo + hi) * lit::<F>(0.5);
        if h(mid) < F::zero() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok((lo + hi) * lit::<F>(0.5))
}

/// The unique lambda with E(lambda) = q. Use [`e_invert_t`] when lambda
/// would underflow.
pub fn e_invert<F: Real>(q: F, params: &DaeParams<F>) -> Result<F> {
    Ok(e_invert_t(q, params)?.exp())
}

/// Gradient magnitude of the primal solution, sqrt(alpha^2 + 2 eps t);
/// equals sqrt(E(lambda)) / lambda, and lies in [0, alpha].
pub fn slope_from_t<F: Real>(t: F, params: &DaeParams<F>) -> Result<F> {
    params.check_t(t)?;
    let bracket = params.alpha_sq() + lit::<F>(2.0) * params.epsilon * t;
    Ok(bracket.max(F::zero()).sqrt())
}

/// Same as [`slope_from_t`] in the lambda domain.
pub fn slope_from_lambda<F: Real>(lambda: F, params: &DaeParams<F>) -> Result<F> {
    if !(lambda > F::zero()) {
        return Err(SolverError::DomainError(format!(
            "lambda must be positive, got {}",
            lambda
        )));
    }
    slope_from_t(lambda.ln(), params)
}

/// Remainder of the small-eps expansion of E about lambda = 1:
/// R(lambda) = E(lambda) - (alpha^2 - 2 eps) lambda^2 - 2 eps lambda^3.
pub fn expansion_remainder<F: Real>(lambda: F, params: &DaeParams<F>) -> Result<F> {
    let e = e_forward(lambda, params)?;
    let two_eps = lit::<F>(2.0) * params.epsilon;
    let l2 = lambda * lambda;
    Ok(e - (params.alpha_sq() - two_eps) * l2 - two_eps * l2 * lambda)
}
