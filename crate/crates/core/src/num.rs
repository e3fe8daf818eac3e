//! Scalar abstraction for the numeric kernels.
//!
//! Everything in this crate is generic over [`Real`], a thin extension of
//! `num_traits::Float` that adds the special functions the fitters need and
//! the per-type tolerances used by the simplex invariants. `f64` is the
//! scalar the pipeline ships with; `f32` is supported with proportionally
//! looser tolerances.

use std::fmt::{Debug, Display};
use std::iter::Sum;
use std::ops::{AddAssign, DivAssign, MulAssign, SubAssign};

use num_traits::{Float, FromPrimitive, ToPrimitive};

pub trait Real:
    Float
    + FromPrimitive
    + ToPrimitive
    + AddAssign
    + SubAssign
    + MulAssign
    + DivAssign
    + Sum
    + Display
    + Debug
    + Send
    + Sync
    + 'static
{
    /// Absolute tolerance on simplex sums (`|Σ mass − 1|`).
    fn sum_tol() -> Self;

    /// Band within which an off-simplex sum is silently renormalized;
    /// beyond it the vector is rejected.
    fn renorm_band() -> Self;

    /// Magnitude below which a negative entry counts as roundoff and is
    /// clamped to zero.
    fn neg_tol() -> Self;

    /// Floor applied to probabilities before taking logarithms.
    fn prob_floor() -> Self;

    fn ln_gamma(self) -> Self;
    fn erf(self) -> Self;
    fn erfc(self) -> Self;

    /// Conversion from an `f64` literal. Lossy for narrower scalars.
    fn cst(x: f64) -> Self {
        Self::from_f64(x).expect("f64 constant converts to scalar")
    }

    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Real for f64 {
    fn sum_tol() -> Self {
        1e-9
    }
    fn renorm_band() -> Self {
        1e-6
    }
    fn neg_tol() -> Self {
        1e-12
    }
    fn prob_floor() -> Self {
        1e-300
    }
    fn ln_gamma(self) -> Self {
        libm::lgamma_r(self).0
    }
    fn erf(self) -> Self {
        libm::erf(self)
    }
    fn erfc(self) -> Self {
        libm::erfc(self)
    }
}

impl Real for f32 {
    fn sum_tol() -> Self {
        1e-4
    }
    fn renorm_band() -> Self {
        1e-3
    }
    fn neg_tol() -> Self {
        1e-5
    }
    fn prob_floor() -> Self {
        f32::MIN_POSITIVE
    }
    fn ln_gamma(self) -> Self {
        libm::lgammaf_r(self).0
    }
    fn erf(self) -> Self {
        libm::erff(self)
    }
    fn erfc(self) -> Self {
        libm::erfcf(self)
    }
}
