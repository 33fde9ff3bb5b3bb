//! Scalar abstraction and Gaussian special functions.
//!
//! Every numeric routine in this crate is generic over [`Real`], a small
//! extension of `num_traits::Float` that adds the complementary error
//! function and the conversion/threading bounds the estimators need.
//! `f64` is the scalar used by the concrete aliases at the crate root and
//! by the CLI; `f32` is supported for completeness.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, NumAssignOps, ToPrimitive};

/// Floating-point scalar usable throughout the crate.
pub trait Real:
    Float + FromPrimitive + ToPrimitive + NumAssignOps + Sum + Debug + Display + Send + Sync + 'static
{
    /// Complementary error function `erfc(x) = 1 - erf(x)`.
    fn erfc(self) -> Self;
}

impl Real for f64 {
    fn erfc(self) -> Self {
        libm::erfc(self)
    }
}

impl Real for f32 {
    fn erfc(self) -> Self {
        libm::erfcf(self)
    }
}

/// Lift an `f64` constant into the scalar type.
#[inline]
pub fn c<T: Real>(v: f64) -> T {
    T::from(v).expect("constant not representable in scalar type")
}

const LN_2PI: f64 = 1.837_877_066_409_345_3;
const FRAC_1_SQRT_2: f64 = std::f64::consts::FRAC_1_SQRT_2;

/// Standard normal density.
#[inline]
pub fn norm_pdf<T: Real>(x: T) -> T {
    norm_ln_pdf(x).exp()
}

/// Log of the standard normal density.
#[inline]
pub fn norm_ln_pdf<T: Real>(x: T) -> T {
    -(x * x + c::<T>(LN_2PI)) / c::<T>(2.0)
}

/// Standard normal CDF via the complementary error function.
#[inline]
pub fn norm_cdf<T: Real>(x: T) -> T {
    c::<T>(0.5) * (-x * c::<T>(FRAC_1_SQRT_2)).erfc()
}

/// Log of the standard normal CDF, stable in the far lower tail.
///
/// Below the point where `norm_cdf` would lose precision to underflow the
/// Mills-ratio asymptotic series takes over:
/// `ln Φ(x) = ln φ(x) - ln(-x) + ln(1 - 1/x² + 3/x⁴ - 15/x⁶ + ...)`.
pub fn norm_ln_cdf<T: Real>(x: T) -> T {
    // Φ(x) underflows near -sqrt(-2 ln MIN); switch a safe margin earlier.
    let underflow_at = -(-T::min_positive_value().ln() * c::<T>(2.0)).sqrt();
    if x > underflow_at * c::<T>(0.7) {
        norm_cdf(x).ln()
    } else {
        let inv2 = (x * x).recip();
        let series = c::<T>(1.0)
            + inv2
                * (-c::<T>(1.0)
                    + inv2
                        * (c::<T>(3.0)
                            + inv2
                                * (-c::<T>(15.0) + inv2 * (c::<T>(105.0) - inv2 * c::<T>(945.0)))));
        norm_ln_pdf(x) - (-x).ln() + series.ln()
    }
}

/// Inverse Mills ratio `λ(x) = φ(x)/Φ(x)`, computed in log space.
#[inline]
pub fn mills<T: Real>(x: T) -> T {
    (norm_ln_pdf(x) - norm_ln_cdf(x)).exp()
}
