use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

/// A number of the form `numerator / 2^exponent`.
///
/// Always normalized: either `exponent == 0` or the numerator is odd, so two
/// dyadics are equal exactly when their fields are equal.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Dyadic {
    numerator: BigInt,
    exponent: u64,
}

impl Dyadic {
    pub fn new(numerator: impl Into<BigInt>, exponent: u64) -> Self {
        let mut d = Dyadic {
            numerator: numerator.into(),
            exponent,
        };
        d.normalize();
        d
    }

    pub fn zero() -> Self {
        Dyadic::new(0, 0)
    }

    pub fn one() -> Self {
        Dyadic::new(1, 0)
    }

    /// `2^{-k}`.
    pub fn pow2_neg(k: u64) -> Self {
        Dyadic::new(1, k)
    }

    fn normalize(&mut self) {
        if self.numerator.is_zero() {
            self.exponent = 0;
            return;
        }
        let tz = self.numerator.trailing_zeros().unwrap_or(0);
        let shift = tz.min(self.exponent);
        if shift > 0 {
            self.numerator >>= shift as usize;
            self.exponent -= shift;
        }
    }

    pub fn numerator(&self) -> &BigInt {
        &self.numerator
    }

    pub fn exponent(&self) -> u64 {
        self.exponent
    }

    pub fn is_zero(&self) -> bool {
        self.numerator.is_zero()
    }

    /// Exact conversion from a rational whose reduced denominator is a power of two.
    pub fn from_rational(q: &BigRational) -> Option<Self> {
        let den = q.denom();
        if den.is_negative() || den.is_zero() {
            return None;
        }
        let den = den.magnitude();
        let k = den.bits() - 1;
        if *den != BigUint::one() << k as usize {
            return None;
        }
        Some(Dyadic::new(q.numer().clone(), k))
    }

    pub fn to_rational(&self) -> BigRational {
        BigRational::new(
            self.numerator.clone(),
            BigInt::one() << self.exponent as usize,
        )
    }

    /// Numerator rescaled to denominator `2^k` (requires `k >= exponent`).
    pub fn scaled_numerator(&self, k: u64) -> BigInt {
        debug_assert!(k >= self.exponent);
        &self.numerator << (k - self.exponent) as usize
    }

    /// Divide by `2^k`.
    pub fn shr(&self, k: u64) -> Self {
        Dyadic::new(self.numerator.clone(), self.exponent + k)
    }

    /// Multiply by `2^k`.
    pub fn shl(&self, k: u64) -> Self {
        if k <= self.exponent {
            Dyadic::new(self.numerator.clone(), self.exponent - k)
        } else {
            Dyadic::new(&self.numerator << (k - self.exponent) as usize, 0)
        }
    }

    pub fn abs(&self) -> Self {
        Dyadic::new(self.numerator.abs(), self.exponent)
    }

    pub fn to_f64(&self) -> f64 {
        let bits = self.numerator.bits();
        let (top, shift) = if bits > 64 {
            let s = bits - 64;
            ((&self.numerator >> s as usize).to_f64().unwrap_or(0.0), s as i64)
        } else {
            (self.numerator.to_f64().unwrap_or(0.0), 0)
        };
        super::ldexp(top, shift - self.exponent as i64)
    }

    /// `0 <= self <= 1`.
    pub fn in_unit_interval(&self) -> bool {
        !self.numerator.is_negative()
            && self.numerator <= BigInt::one() << self.exponent as usize
    }
}

impl Ord for Dyadic {
    fn cmp(&self, other: &Self) -> Ordering {
        let k = self.exponent.max(other.exponent);
        self.scaled_numerator(k).cmp(&other.scaled_numerator(k))
    }
}

impl PartialOrd for Dyadic {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Add for &Dyadic {
    type Output = Dyadic;
    fn add(self, rhs: &Dyadic) -> Dyadic {
        let k = self.exponent.max(rhs.exponent);
        Dyadic::new(self.scaled_numerator(k) + rhs.scaled_numerator(k), k)
    }
}

impl Sub for &Dyadic {
    type Output = Dyadic;
    fn sub(self, rhs: &Dyadic) -> Dyadic {
        let k = self.exponent.max(rhs.exponent);
        Dyadic::new(self.scaled_numerator(k) - rhs.scaled_numerator(k), k)
    }
}

impl Mul for &Dyadic {
    type Output = Dyadic;
    fn mul(self, rhs: &Dyadic) -> Dyadic {
        Dyadic::new(
            &self.numerator * &rhs.numerator,
            self.exponent + rhs.exponent,
        )
    }
}

impl Neg for &Dyadic {
    type Output = Dyadic;
    fn neg(self) -> Dyadic {
        Dyadic::new(-self.numerator.clone(), self.exponent)
    }
}

impl fmt::Display for Dyadic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.exponent == 0 {
            write!(f, "{}", self.numerator)
        } else {
            write!(f, "{}/2^{}", self.numerator, self.exponent)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn construction_normalizes() {
        let d = Dyadic::new(12, 4);
        assert_eq!(d.numerator(), &BigInt::from(3));
        assert_eq!(d.exponent(), 2);
        assert_eq!(Dyadic::new(8, 2), Dyadic::new(2, 0));
        assert_eq!(Dyadic::new(0, 9).exponent(), 0);
    }

    #[test]
    fn arithmetic_stays_normalized() {
        let a = Dyadic::new(1, 2);
        let b = Dyadic::new(1, 2);
        let s = &a + &b;
        assert_eq!(s, Dyadic::new(1, 1));
        assert_eq!(s.exponent(), 1);
        assert_eq!(&Dyadic::new(3, 3) - &Dyadic::new(1, 3), Dyadic::new(1, 2));
        assert_eq!(&Dyadic::new(3, 1) * &Dyadic::new(1, 1), Dyadic::new(3, 2));
    }

    #[test]
    fn rational_round_trip() {
        let q = BigRational::new(5.into(), 32.into());
        let d = Dyadic::from_rational(&q).unwrap();
        assert_eq!(d.to_rational(), q);
        assert!(Dyadic::from_rational(&BigRational::new(1.into(), 3.into())).is_none());
    }

    #[test]
    fn ordering_and_unit_interval() {
        assert!(Dyadic::new(1, 3) < Dyadic::new(1, 2));
        assert!(Dyadic::one().in_unit_interval());
        assert!(!Dyadic::new(5, 2).in_unit_interval());
        assert!(!Dyadic::new(-1, 2).in_unit_interval());
        assert_eq!(Dyadic::new(3, 4).to_f64(), 0.1875);
    }
}
