use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Floating point scalar used by every probability table and rate computation.
///
/// The three tolerances follow the layering of the computations: inputs are
/// checked at construction, derived quantities (sums of a few functionals) get
/// a looser bound, and algebraic identities between derived quantities the
/// loosest.
pub trait Real:
    Float + FromPrimitive + ToPrimitive + Debug + Display + Default + Sum + Send + Sync + 'static
{
    /// Allowed deviation of a pmf sum from one at construction.
    fn normalization_tol() -> Self;
    /// Allowed deviation on derived quantities (joint sums, clamping of MI).
    fn derived_tol() -> Self;
    /// Allowed deviation on identities (chain rule, Markov certificates).
    fn identity_tol() -> Self;

    /// Converts an `f64` literal. Panics only if the target type cannot
    /// represent finite doubles, which no implementor does.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("finite f64 literal")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().expect("finite scalar")
    }
}

impl Real for f64 {
    fn normalization_tol() -> Self {
        1e-12
    }
    fn derived_tol() -> Self {
        1e-10
    }
    fn identity_tol() -> Self {
        1e-9
    }
}

impl Real for f32 {
    fn normalization_tol() -> Self {
        1e-5
    }
    fn derived_tol() -> Self {
        1e-4
    }
    fn identity_tol() -> Self {
        1e-3
    }
}

/// `-p log2 p` with the convention `0 log 0 = 0`.
#[inline]
pub fn plog2p<F: Real>(p: F) -> F {
    if p > F::zero() {
        -p * p.log2()
    } else {
        F::zero()
    }
}
