//! Scalar abstractions.
//!
//! [`Scalar`] is the real field every computation runs over (`f32` or `f64`).
//! [`Number`] is the algebra the expression evaluator targets: plain reals and
//! second-order jets (including jets whose coefficients are themselves jets).

use std::fmt::{Debug, Display};
use std::iter::Sum;
use std::ops::{Add, Div, Mul, Neg, Sub};

use num_traits::{Float, FromPrimitive, One};

/// Real floating-point scalar.
pub trait Scalar:
    Float + FromPrimitive + Number<Real = Self> + Debug + Display + Default + Send + Sync + Sum + 'static
{
    /// Converts an `f64` literal, panicking only if the target cannot represent finite values.
    #[inline]
    fn c(v: f64) -> Self {
        <Self as FromPrimitive>::from_f64(v).expect("finite literal")
    }

    #[inline]
    fn to_f64_lossy(self) -> f64 {
        num_traits::ToPrimitive::to_f64(&self).unwrap_or(f64::NAN)
    }
}

/// Values an expression can be evaluated into.
///
/// All operations are total; domain checks happen in the evaluator before
/// they are invoked, using [`Number::real`].
pub trait Number:
    Clone + Debug + Add<Output = Self> + Sub<Output = Self> + Mul<Output = Self> + Div<Output = Self> + Neg<Output = Self>
{
    type Real: Scalar;

    /// Leading (zeroth-order) real value.
    fn real(&self) -> Self::Real;

    /// A constant with the same shape as `self`.
    fn lift(&self, c: Self::Real) -> Self;

    fn scale(&self, k: Self::Real) -> Self;

    fn recip(&self) -> Self;
    fn sqrt(&self) -> Self;
    fn sin(&self) -> Self;
    fn cos(&self) -> Self;
    fn exp(&self) -> Self;
    fn ln(&self) -> Self;

    /// Real power `self^a`, defined for a strictly positive base.
    fn powf(&self, a: Self::Real) -> Self;

    /// Integer power by repeated squaring.
    fn powi(&self, k: i32) -> Self {
        let mut base = if k < 0 { self.recip() } else { self.clone() };
        let mut e = k.unsigned_abs();
        let mut acc = self.lift(Self::Real::one());
        while e > 0 {
            if e & 1 == 1 {
                acc = acc * base.clone();
            }
            e >>= 1;
            if e > 0 {
                base = base.clone() * base;
            }
        }
        acc
    }
}

macro_rules! impl_scalar {
    ($t:ty) => {
        impl Number for $t {
            type Real = $t;
            #[inline]
            fn real(&self) -> $t {
                *self
            }
            #[inline]
            fn lift(&self, c: $t) -> $t {
                c
            }
            #[inline]
            fn scale(&self, k: $t) -> $t {
                *self * k
            }
            #[inline]
            fn recip(&self) -> $t {
                1.0 / *self
            }
            #[inline]
            fn sqrt(&self) -> $t {
                <$t>::sqrt(*self)
            }
            #[inline]
            fn sin(&self) -> $t {
                <$t>::sin(*self)
            }
            #[inline]
            fn cos(&self) -> $t {
                <$t>::cos(*self)
            }
            #[inline]
            fn exp(&self) -> $t {
                <$t>::exp(*self)
            }
            #[inline]
            fn ln(&self) -> $t {
                <$t>::ln(*self)
            }
            #[inline]
            fn powf(&self, a: $t) -> $t {
                (a * <$t>::ln(*self)).exp()
            }
        }

        impl Scalar for $t {}
    };
}

impl_scalar!(f32);
impl_scalar!(f64);

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn powi_repeated_squaring() {
        assert_eq!(Number::powi(&3.0f64, 5), 243.0);
        assert_eq!(Number::powi(&2.0f64, -2), 0.25);
        assert_eq!(Number::powi(&7.0f64, 0), 1.0);
    }

    #[test]
    fn powf_matches_exp_ln() {
        assert!((Number::powf(&4.0f64, 4.5) - 512.0).abs() < 1e-12);
        assert!((Number::powf(&4.0f32, 0.5) - 2.0).abs() < 1e-6);
    }
}
