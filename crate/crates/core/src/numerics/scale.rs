use std::cmp::Ordering;
use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive, Zero};

use super::parse_rational;
use crate::error::{Error, Result};

/// A length `r = 2^{-E}` stored through its exact exponent `E >= 0`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ScaleExponent(BigRational);

impl ScaleExponent {
    pub fn new(value: BigRational) -> Result<Self> {
        if value.is_negative() {
            return Err(Error::domain(format!(
                "scale exponent {value} is negative (length exceeds 1)"
            )));
        }
        Ok(ScaleExponent(value))
    }

    pub fn from_int(e: impl Into<BigInt>) -> Self {
        let e = e.into();
        assert!(!e.is_negative(), "scale exponent must be non-negative");
        ScaleExponent(BigRational::from_integer(e))
    }

    pub fn zero() -> Self {
        ScaleExponent(BigRational::zero())
    }

    pub fn parse(text: &str) -> Result<Self> {
        ScaleExponent::new(parse_rational(text)?)
    }

    pub fn value(&self) -> &BigRational {
        &self.0
    }

    pub fn is_integer(&self) -> bool {
        self.0.is_integer()
    }

    pub fn floor(&self) -> BigInt {
        self.0.numer().div_floor(self.0.denom())
    }

    pub fn ceil(&self) -> BigInt {
        -((-self.0.numer()).div_floor(self.0.denom()))
    }

    pub fn scaled(&self, factor: &BigRational) -> Result<Self> {
        ScaleExponent::new(&self.0 * factor)
    }

    pub fn to_f64(&self) -> f64 {
        self.0.to_f64().unwrap_or(f64::INFINITY)
    }

    /// Exact exponent as `u64` when integral and small enough.
    pub fn as_u64(&self) -> Option<u64> {
        if self.is_integer() {
            self.0.numer().to_u64()
        } else {
            None
        }
    }
}

/// Orders the lengths `2^{-a}` and `2^{-b}`; larger exponent means shorter length.
pub fn compare_scale(a: &ScaleExponent, b: &ScaleExponent) -> Ordering {
    b.0.cmp(&a.0)
}

impl fmt::Display for ScaleExponent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", super::format_rational(&self.0))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn e(p: i64, q: i64) -> ScaleExponent {
        ScaleExponent::new(BigRational::new(p.into(), q.into())).unwrap()
    }

    #[test]
    fn compare_is_inverted() {
        assert_eq!(compare_scale(&e(20, 1), &e(37, 1)), Ordering::Greater);
        assert_eq!(compare_scale(&e(16, 3), &e(11, 2)), Ordering::Greater);
        assert_eq!(compare_scale(&e(0, 1), &e(0, 1)), Ordering::Equal);
    }

    #[test]
    fn floor_and_ceil() {
        assert_eq!(e(16, 3).floor(), 5.into());
        assert_eq!(e(16, 3).ceil(), 6.into());
        assert_eq!(e(8, 1).ceil(), 8.into());
    }

    #[test]
    fn rejects_negative() {
        assert!(ScaleExponent::new(BigRational::from_integer((-1).into())).is_err());
        assert_eq!(ScaleExponent::parse("16/3").unwrap(), e(16, 3));
    }
}
