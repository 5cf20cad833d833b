//! Scalar abstraction: the whole numerical core is generic over the
//! floating-point type through [`Real`]. Concrete aliases for the f64
//! instantiation live at the crate root.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive};

/// Floating-point scalar usable by the solver core (f32 or f64).
pub trait Real:
    Float + FromPrimitive + Sum + Debug + Display + Copy + Send + Sync + 'static
{
}

impl<T> Real for T where
    T: Float + FromPrimitive + Sum + Debug + Display + Copy + Send + Sync + 'static
{
}

/// Shorthand for lifting an f64 literal into the generic scalar.
#[inline]
pub fn lit<F: Real>(x: f64) -> F {
    F::from_f64(x).expect("literal not representable in scalar type")
}

/// Lift a usize (grid sizes, dimensions) into the generic scalar.
#[inline]
pub fn lit_usize<F: Real>(n: usize) -> F {
    F::from_usize(n).expect("usize not representable in scalar type")
}
