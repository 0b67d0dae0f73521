//! Scalar abstractions.
//!
//! Everything that only needs field arithmetic and ordering (parameters,
//! atom positions, pencils, inertia counts) is written against [`Scalar`],
//! which is implemented for `f32`, `f64` and the exact [`BigRational`].
//! Bisection, dense eigensolves and asymptotic extraction need transcendental
//! functions and are written against [`Real`] (`Scalar + Float`).

use std::fmt::{Debug, Display};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Float, Num, Signed, ToPrimitive};
use twofloat::TwoFloat;

pub trait Scalar: Num + Signed + Clone + PartialOrd + Debug + Display + Send + Sync + 'static {
    /// Nearest representable value of an exact rational.
    fn from_rational(r: &BigRational) -> Self;

    fn to_f64(&self) -> f64;

    /// `true` when arithmetic is exact (no rounding).
    fn is_exact() -> bool;

    /// Unit roundoff of the arithmetic; zero for exact types.
    fn roundoff() -> f64;

    /// `false` for infinities and NaNs; always `true` for exact types.
    fn is_representable(&self) -> bool;

    /// Equality up to a relative tolerance `rel` (scaled by `max(1, |a|, |b|)`).
    /// Exact types ignore `rel` and compare exactly.
    fn close_to(&self, other: &Self, rel: f64) -> bool;

    fn from_i64(v: i64) -> Self {
        Self::from_rational(&BigRational::from_integer(BigInt::from(v)))
    }

    fn from_ratio(num: i64, den: i64) -> Self {
        Self::from_rational(&BigRational::new(BigInt::from(num), BigInt::from(den)))
    }

    /// Exact value of the nearest `f64` for exact types, a cast otherwise.
    fn from_f64(v: f64) -> Self {
        match BigRational::from_float(v) {
            Some(r) => Self::from_rational(&r),
            None => Self::from_rational(&BigRational::from_integer(BigInt::from(0))),
        }
    }
}

macro_rules! impl_float_scalar {
    ($t:ty) => {
        impl Scalar for $t {
            fn from_rational(r: &BigRational) -> Self {
                ToPrimitive::to_f64(r).map(|v| v as $t).unwrap_or(<$t>::NAN)
            }

            fn to_f64(&self) -> f64 {
                *self as f64
            }

            fn is_exact() -> bool {
                false
            }

            fn roundoff() -> f64 {
                <$t>::EPSILON as f64
            }

            fn is_representable(&self) -> bool {
                self.is_finite()
            }

            fn close_to(&self, other: &Self, rel: f64) -> bool {
                let scale = 1.0_f64.max((*self as f64).abs()).max((*other as f64).abs());
                ((*self as f64) - (*other as f64)).abs() <= rel * scale
            }

            fn from_f64(v: f64) -> Self {
                v as $t
            }
        }
    };
}

impl_float_scalar!(f32);
impl_float_scalar!(f64);

impl Scalar for BigRational {
    fn from_rational(r: &BigRational) -> Self {
        r.clone()
    }

    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }

    fn is_exact() -> bool {
        true
    }

    fn roundoff() -> f64 {
        0.0
    }

    fn is_representable(&self) -> bool {
        true
    }

    fn close_to(&self, other: &Self, _rel: f64) -> bool {
        self == other
    }
}

/// Double-double: `hi + lo` with `|lo| ≤ ulp(hi)/2`, about 106 bits.
impl Scalar for TwoFloat {
    fn from_rational(r: &BigRational) -> Self {
        let hi = ToPrimitive::to_f64(r).unwrap_or(f64::NAN);
        let rest = BigRational::from_float(hi).map(|h| r - h);
        let lo = rest.and_then(|x| ToPrimitive::to_f64(&x)).unwrap_or(0.0);
        TwoFloat::from_f64(hi) + TwoFloat::from_f64(lo)
    }

    fn to_f64(&self) -> f64 {
        self.hi() + self.lo()
    }

    fn is_exact() -> bool {
        false
    }

    // `Float::epsilon` for `TwoFloat` is the smallest normal, not the roundoff.
    fn roundoff() -> f64 {
        f64::EPSILON * f64::EPSILON
    }

    fn is_representable(&self) -> bool {
        self.hi().is_finite() && self.is_valid()
    }

    fn close_to(&self, other: &Self, rel: f64) -> bool {
        let scale = 1.0_f64.max(self.hi().abs()).max(other.hi().abs());
        (*self - *other).hi().abs() <= rel * scale
    }

    fn from_f64(v: f64) -> Self {
        TwoFloat::from_f64(v)
    }
}

/// Floating point scalars.
pub trait Real: Scalar + Float {}

impl<T: Scalar + Float> Real for T {}

/// `|x|` without the `Signed`/`Float` method ambiguity.
#[inline]
pub(crate) fn fabs<T: Float>(x: T) -> T {
    x.abs()
}

/// `a / b` with one residual correction. `TwoFloat` division is only
/// accurate to about `f64` precision; the correction restores the full width
/// and costs nothing in accuracy for the primitive floats.
#[inline]
pub(crate) fn quot<T: Real>(a: T, b: T) -> T {
    let q = a / b;
    q + (a - q * b) / b
}

#[inline]
pub(crate) fn cst<T: Real>(v: f64) -> T {
    <T as Scalar>::from_f64(v)
}

pub(crate) fn max_abs<'a, T: Scalar>(values: impl IntoIterator<Item = &'a T>) -> T {
    values.into_iter().fold(T::zero(), |acc, v| if v.abs() > acc { v.abs() } else { acc })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rational_round_trip_through_f64() {
        let third = BigRational::from_ratio(1, 3);
        assert_eq!(third, BigRational::new(1.into(), 3.into()));
        assert!((Scalar::to_f64(&third) - 1.0 / 3.0).abs() < 1e-16);
        assert_eq!(<f64 as Scalar>::from_rational(&third), 1.0 / 3.0);
    }

    #[test]
    fn from_f64_is_exact_for_rationals() {
        let r = <BigRational as Scalar>::from_f64(0.1);
        assert_eq!(Scalar::to_f64(&r), 0.1);
        assert_ne!(r, BigRational::from_ratio(1, 10));
    }

    #[test]
    fn close_to_semantics() {
        assert!(1.0_f64.close_to(&(1.0 + 1e-12), 1e-10));
        assert!(!1.0_f64.close_to(&1.001, 1e-10));
        let a = BigRational::from_ratio(2, 3);
        assert!(a.close_to(&BigRational::from_ratio(4, 6), 0.0));
        assert!(!a.close_to(&BigRational::from_ratio(3, 4), 1.0));
    }
}
