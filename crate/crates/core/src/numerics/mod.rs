//! Exact arithmetic substrate: dyadic rationals, scale exponents, interval
//! families with exact union measure, and certified ball arithmetic.

pub mod ball;
pub mod dyadic;
pub mod interval;
pub mod scale;

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

pub use ball::Real;
pub use dyadic::Dyadic;
pub use interval::{Interval, IntervalFamily, Measure, Radius, DEFAULT_TOLERANCE_BITS};
pub use scale::{compare_scale, ScaleExponent};

/// `x * 2^e` without intermediate overflow or premature underflow.
pub fn ldexp(mut x: f64, mut e: i64) -> f64 {
    while e > 1000 {
        x *= 2f64.powi(1000);
        e -= 1000;
        if x.is_infinite() {
            return x;
        }
    }
    while e < -1000 {
        x *= 2f64.powi(-1000);
        e += 1000;
        if x == 0.0 {
            return x;
        }
    }
    x * 2f64.powi(e as i32)
}

/// `2^k` as a rational (negative `k` allowed).
pub fn pow2(k: i64) -> BigRational {
    if k >= 0 {
        BigRational::from_integer(BigInt::one() << k as usize)
    } else {
        BigRational::new(BigInt::one(), BigInt::one() << (-k) as usize)
    }
}

/// Parses `p`, `p/q` or a finite decimal such as `0.25`.
pub fn parse_rational(text: &str) -> Result<BigRational> {
    let t = text.trim();
    let bad = || Error::parse(format!("not a rational number: {text:?}"));
    if let Some((p, q)) = t.split_once('/') {
        let p: BigInt = p.trim().parse().map_err(|_| bad())?;
        let q: BigInt = q.trim().parse().map_err(|_| bad())?;
        if q.is_zero() {
            return Err(bad());
        }
        return Ok(BigRational::new(p, q));
    }
    if let Some((whole, frac)) = t.split_once('.') {
        if frac.is_empty() || !frac.bytes().all(|b| b.is_ascii_digit()) {
            return Err(bad());
        }
        let negative = whole.starts_with('-');
        let whole: BigInt = match whole {
            "" | "-" | "+" => BigInt::zero(),
            w => w.parse().map_err(|_| bad())?,
        };
        let scale = BigInt::from(10u32).pow(frac.len() as u32);
        let frac: BigInt = frac.parse().map_err(|_| bad())?;
        let mag = whole.abs() * &scale + frac;
        let num = if negative { -mag } else { mag };
        return Ok(BigRational::new(num, scale));
    }
    let p: BigInt = t.parse().map_err(|_| bad())?;
    Ok(BigRational::from_integer(p))
}

/// `p/q`, or just `p` for integers.
pub fn format_rational(q: &BigRational) -> String {
    if q.is_integer() {
        q.numer().to_string()
    } else {
        format!("{}/{}", q.numer(), q.denom())
    }
}

/// `log2 |q|` in floating point, valid for magnitudes far outside the f64 range.
pub fn log2_rational(q: &BigRational) -> f64 {
    fn log2_int(n: &BigInt) -> f64 {
        let bits = n.bits();
        if bits <= 1000 {
            n.abs().to_f64().unwrap().log2()
        } else {
            let shift = bits - 64;
            (n.abs() >> shift as usize).to_f64().unwrap().log2() + shift as f64
        }
    }
    log2_int(q.numer()) - log2_int(q.denom())
}

/// Exact two-sided rational bounds on `2^{-e}` of width at most `2^{-bits}`.
///
/// Integral exponents are exact. Otherwise, with `e = p/q`, the integer
/// `N = floor(2^{bits - e})` is found as the `q`-th root of `2^{bits q - p}`.
pub fn pow2_neg_bounds(e: &ScaleExponent, bits: u64) -> Result<(BigRational, BigRational)> {
    if e.is_integer() {
        let k = e
            .as_u64()
            .ok_or_else(|| Error::Precision(format!("exponent {e} too large to expand")))?;
        let v = BigRational::new(BigInt::one(), BigInt::one() << k as usize);
        return Ok((v.clone(), v));
    }
    let p = e.value().numer().magnitude().clone();
    let q = e.value().denom().magnitude().clone();
    let b = bits.max(e.ceil().to_u64().unwrap_or(u64::MAX));
    let q_u32 = q
        .to_u32()
        .ok_or_else(|| Error::Precision(format!("denominator of {e} too large")))?;
    let total = BigUint::from(b) * &q - &p;
    let total = total
        .to_u64()
        .filter(|t| *t <= 1 << 26)
        .ok_or_else(|| Error::Precision(format!("bracketing 2^-({e}) needs too many bits")))?;
    let big = BigUint::one() << total as usize;
    let n = big.nth_root(q_u32);
    let den = BigInt::one() << b as usize;
    let lo = BigRational::new(BigInt::from(n.clone()), den.clone());
    let hi = BigRational::new(BigInt::from(n + 1u32), den);
    Ok((lo, hi))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_rationals_and_decimals() {
        assert_eq!(parse_rational("1/4").unwrap(), BigRational::new(1.into(), 4.into()));
        assert_eq!(parse_rational("0.25").unwrap(), BigRational::new(1.into(), 4.into()));
        assert_eq!(parse_rational("-1.5").unwrap(), BigRational::new((-3).into(), 2.into()));
        assert_eq!(parse_rational("7").unwrap(), BigRational::from_integer(7.into()));
        assert!(parse_rational("1/0").is_err());
        assert!(parse_rational("abc").is_err());
    }

    #[test]
    fn irrational_power_bounds_bracket_the_value() {
        let e = ScaleExponent::parse("16/3").unwrap();
        let (lo, hi) = pow2_neg_bounds(&e, 60).unwrap();
        assert!(&hi - &lo <= pow2(-60));
        // lo^3 <= 2^-16 <= hi^3, checked exactly.
        let target = pow2(-16);
        assert!(&lo * &lo * &lo <= target && target <= &hi * &hi * &hi);
    }

    #[test]
    fn ldexp_handles_extremes() {
        assert_eq!(ldexp(1.0, -1074), f64::from_bits(1));
        assert_eq!(ldexp(1.0, 3000), f64::INFINITY);
        assert_eq!(ldexp(3.0, -2), 0.75);
        assert_eq!(log2_rational(&pow2(-5000)), -5000.0);
    }
}
