//! Certified ball arithmetic on binary floating values.
//!
//! A [`Real`] is a midpoint and radius sharing one binary exponent. Every
//! operation returns a ball that contains the exact result for every choice of
//! inputs inside the argument balls; `prec` is the number of midpoint bits kept.

use std::collections::HashMap;
use std::sync::{Mutex, OnceLock};

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use super::{ldexp, log2_rational, Dyadic};
use crate::error::{Error, Result};

/// The set `[(mid - rad) 2^exp, (mid + rad) 2^exp]`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Real {
    mid: BigInt,
    rad: BigUint,
    exp: i64,
}

impl Real {
    pub fn from_int(v: impl Into<BigInt>) -> Self {
        Real {
            mid: v.into(),
            rad: BigUint::zero(),
            exp: 0,
        }
    }

    pub fn from_dyadic(d: &Dyadic) -> Self {
        Real {
            mid: d.numerator().clone(),
            rad: BigUint::zero(),
            exp: -(d.exponent() as i64),
        }
    }

    pub fn from_rational(q: &BigRational, prec: u64) -> Self {
        let (n, d) = (q.numer(), q.denom());
        if n.is_zero() {
            return Real::from_int(0);
        }
        let k = (prec as i64 + 2 + d.bits() as i64 - n.bits() as i64).max(0);
        let (quo, rem) = (n << k as usize).div_rem(d);
        Real {
            mid: quo,
            rad: if rem.is_zero() { BigUint::zero() } else { BigUint::one() },
            exp: -k,
        }
        .normalize(prec)
    }

    /// Smallest ball containing both `lo` and `hi`.
    pub fn from_bounds(lo: &BigRational, hi: &BigRational, prec: u64) -> Self {
        Real::from_rational(lo, prec).hull(&Real::from_rational(hi, prec))
    }

    pub fn mid(&self) -> BigRational {
        scale_rational(&self.mid, self.exp)
    }

    pub fn lower(&self) -> BigRational {
        scale_rational(&(&self.mid - BigInt::from(self.rad.clone())), self.exp)
    }

    pub fn upper(&self) -> BigRational {
        scale_rational(&(&self.mid + BigInt::from(self.rad.clone())), self.exp)
    }

    pub fn is_exact(&self) -> bool {
        self.rad.is_zero()
    }

    pub fn is_positive(&self) -> bool {
        self.mid.is_positive() && self.mid.magnitude() > &self.rad
    }

    pub fn is_negative(&self) -> bool {
        self.mid.is_negative() && self.mid.magnitude() > &self.rad
    }

    pub fn to_f64(&self) -> f64 {
        int_to_f64(&self.mid, self.exp)
    }

    /// Outward-rounded floating bounds.
    pub fn to_f64_bounds(&self) -> (f64, f64) {
        let r = BigInt::from(self.rad.clone());
        let lo = int_to_f64(&(&self.mid - &r), self.exp);
        let hi = int_to_f64(&(&self.mid + &r), self.exp);
        (lo.next_down().next_down(), hi.next_up().next_up())
    }

    /// True when the radius is at most `10^{-(digits+1)}` of the magnitude.
    pub fn has_relative_accuracy(&self, digits: u32) -> bool {
        let scale = BigUint::from(10u32).pow(digits + 1);
        !self.mid.is_zero() && &self.rad * scale <= *self.mid.magnitude()
    }

    /// Drops midpoint bits beyond `prec`, widening the radius to compensate.
    pub fn normalize(mut self, prec: u64) -> Self {
        let bits = self.mid.bits().max(self.rad.bits());
        if bits > prec + 2 {
            let s = bits - prec;
            self.mid >>= s as usize;
            self.rad = (self.rad >> s as usize) + 2u32;
            self.exp += s as i64;
        }
        self
    }

    /// Midpoint and radius at exponent `e`, rounding outward when `e > exp`.
    fn at_exp(&self, e: i64) -> (BigInt, BigUint) {
        if e <= self.exp {
            let s = (self.exp - e) as usize;
            (&self.mid << s, &self.rad << s)
        } else {
            let s = (e - self.exp) as usize;
            (&self.mid >> s, (&self.rad >> s) + 1u32)
        }
    }

    fn top(&self) -> i64 {
        let m = self.mid.magnitude() + &self.rad;
        self.exp + m.bits() as i64
    }

    pub fn neg(&self) -> Self {
        Real {
            mid: -self.mid.clone(),
            rad: self.rad.clone(),
            exp: self.exp,
        }
    }

    pub fn add(&self, o: &Real, prec: u64) -> Self {
        let top = self.top().max(o.top());
        let e = self.exp.min(o.exp).max(top - prec as i64 - 8);
        let (m1, r1) = self.at_exp(e);
        let (m2, r2) = o.at_exp(e);
        Real {
            mid: m1 + m2,
            rad: r1 + r2,
            exp: e,
        }
        .normalize(prec)
    }

    pub fn sub(&self, o: &Real, prec: u64) -> Self {
        self.add(&o.neg(), prec)
    }

    pub fn mul(&self, o: &Real, prec: u64) -> Self {
        let rad = self.mid.magnitude() * &o.rad + o.mid.magnitude() * &self.rad + &self.rad * &o.rad;
        Real {
            mid: &self.mid * &o.mid,
            rad,
            exp: self.exp + o.exp,
        }
        .normalize(prec)
    }

    pub fn div(&self, o: &Real, prec: u64) -> Result<Self> {
        let mb = o.mid.magnitude();
        if mb <= &o.rad {
            return Err(Error::Precision("division by a ball containing zero".into()));
        }
        let k = (prec as i64 + 8 + o.mid.bits() as i64 - self.mid.bits() as i64).max(0) as usize;
        let mid = (&self.mid << k) / &o.mid;
        let num = (&self.rad * mb + self.mid.magnitude() * &o.rad) << k;
        let den = (mb - &o.rad) * mb;
        let rad = num.div_ceil(&den) + 1u32;
        Ok(Real {
            mid,
            rad,
            exp: self.exp - o.exp - k as i64,
        }
        .normalize(prec))
    }

    /// Exact multiplication by `2^k`.
    pub fn mul_pow2(&self, k: i64) -> Self {
        Real {
            mid: self.mid.clone(),
            rad: self.rad.clone(),
            exp: self.exp + k,
        }
    }

    pub fn hull(&self, o: &Real) -> Self {
        let e = self.exp.min(o.exp);
        let (m1, r1) = self.at_exp(e);
        let (m2, r2) = o.at_exp(e);
        let (r1, r2) = (BigInt::from(r1), BigInt::from(r2));
        let lo = (&m1 - &r1).min(&m2 - &r2);
        let hi = (&m1 + &r1).max(&m2 + &r2);
        let twice_mid = &lo + &hi;
        // Round the midpoint down to an integer and cover the half unit lost.
        let mid = twice_mid.div_floor(&BigInt::from(2));
        let rad = (&hi - &mid).max(&mid - &lo);
        Real {
            mid,
            rad: rad.to_biguint().unwrap_or_default(),
            exp: e,
        }
    }

    /// Decimal rendering with `digits` significant digits.
    pub fn to_decimal(&self, digits: u32) -> String {
        format_decimal(&self.mid(), digits)
    }
}

/// Division by `2^p` rounding toward zero, so iterated products reach zero.
fn shr_trunc(x: BigInt, p: u64) -> BigInt {
    if x.is_negative() {
        -((-x) >> p as usize)
    } else {
        x >> p as usize
    }
}

fn scale_rational(m: &BigInt, e: i64) -> BigRational {
    if e >= 0 {
        BigRational::from_integer(m << e as usize)
    } else {
        BigRational::new(m.clone(), BigInt::one() << (-e) as usize)
    }
}

fn int_to_f64(m: &BigInt, e: i64) -> f64 {
    let bits = m.bits();
    if bits > 64 {
        let s = bits - 64;
        ldexp((m >> s as usize).to_f64().unwrap(), e + s as i64)
    } else {
        ldexp(m.to_f64().unwrap(), e)
    }
}

/// Renders a rational with `digits` significant digits (round half up).
pub fn format_decimal(v: &BigRational, digits: u32) -> String {
    if v.is_zero() {
        return "0".into();
    }
    let digits = digits.max(1);
    let neg = v.is_negative();
    let a = v.abs();
    let mut e10 = (log2_rational(&a) * std::f64::consts::LOG10_2).floor() as i64;
    let ten = BigInt::from(10);
    let mut n;
    loop {
        let shift = digits as i64 - 1 - e10;
        let scaled = if shift >= 0 {
            &a * BigRational::from_integer(ten.pow(shift as u32))
        } else {
            &a / BigRational::from_integer(ten.pow((-shift) as u32))
        };
        n = (scaled + BigRational::new(1.into(), 2.into())).floor().to_integer();
        if n >= ten.pow(digits) {
            e10 += 1;
        } else if n < ten.pow(digits - 1) {
            e10 -= 1;
        } else {
            break;
        }
    }
    let s = n.to_string();
    let sign = if neg { "-" } else { "" };
    if (-6..15).contains(&e10) {
        let point = e10 + 1;
        if point <= 0 {
            format!("{sign}0.{}{s}", "0".repeat((-point) as usize))
        } else if point as usize >= s.len() {
            format!("{sign}{s}{}", "0".repeat(point as usize - s.len()))
        } else {
            format!("{sign}{}.{}", &s[..point as usize], &s[point as usize..])
        }
    } else if s.len() == 1 {
        format!("{sign}{s}e{e10}")
    } else {
        format!("{sign}{}.{}e{e10}", &s[..1], &s[1..])
    }
}

/// Repeats `eval` at growing precision until every returned ball carries
/// `digits` correct significant digits.
pub fn certify<T, F>(digits: u32, mut eval: F, balls: fn(&T) -> Vec<&Real>) -> Result<T>
where
    F: FnMut(u64) -> Result<T>,
{
    let mut prec = (digits as f64 * std::f64::consts::LOG2_10).ceil() as u64 + 32;
    for _ in 0..8 {
        let out = eval(prec)?;
        if balls(&out).iter().all(|b| b.has_relative_accuracy(digits)) {
            return Ok(out);
        }
        prec *= 2;
    }
    Err(Error::Precision(format!(
        "could not certify {digits} digits within working precision {prec}"
    )))
}

// ---------------------------------------------------------------------------
// Constants

fn cache() -> &'static Mutex<HashMap<(u8, u64), Real>> {
    static CACHE: OnceLock<Mutex<HashMap<(u8, u64), Real>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

fn cached(tag: u8, prec: u64, f: impl FnOnce(u64) -> Real) -> Real {
    let prec = prec.next_multiple_of(64);
    if let Some(v) = cache().lock().unwrap().get(&(tag, prec)) {
        return v.clone();
    }
    let v = f(prec);
    cache().lock().unwrap().insert((tag, prec), v.clone());
    v
}

/// `sum (-1)^i / ((2i+1) n^{2i+1})` (or without signs) in fixed point, with its error in units.
fn arctan_inv(n: u32, p: u64, alternating: bool) -> (BigInt, BigUint) {
    let mut power = (BigInt::one() << p as usize) / n;
    let n2 = BigInt::from(n) * n;
    let mut sum = BigInt::zero();
    let mut terms = 0u64;
    let mut i = 0u64;
    while !power.is_zero() {
        let t = &power / (2 * i + 1);
        if alternating && i % 2 == 1 {
            sum -= t;
        } else {
            sum += t;
        }
        power /= &n2;
        i += 1;
        terms += 1;
    }
    (sum, BigUint::from(terms + 2))
}

pub fn pi(prec: u64) -> Real {
    cached(0, prec, |prec| {
        let p = prec + 16;
        let (a, ra) = arctan_inv(5, p, true);
        let (b, rb) = arctan_inv(239, p, true);
        Real {
            mid: a * 16 - b * 4,
            rad: ra * 16u32 + rb * 4u32,
            exp: -(p as i64),
        }
        .normalize(prec)
    })
}

pub fn ln2(prec: u64) -> Real {
    cached(1, prec, |prec| {
        let p = prec + 16;
        let (a, ra) = arctan_inv(3, p, false);
        Real {
            mid: a * 2,
            rad: ra * 2u32,
            exp: -(p as i64),
        }
        .normalize(prec)
    })
}

// ---------------------------------------------------------------------------
// Elementary functions

fn endpoints(x: &Real) -> (BigInt, BigInt) {
    let r = BigInt::from(x.rad.clone());
    (&x.mid - &r, &x.mid + &r)
}

/// Natural logarithm of a positive ball.
pub fn ln(x: &Real, prec: u64) -> Result<Real> {
    if !x.is_positive() {
        return Err(Error::domain("logarithm of a ball that is not strictly positive"));
    }
    if x.is_exact() {
        return Ok(ln_point(x.mid.magnitude(), x.exp, prec));
    }
    let (lo, hi) = endpoints(x);
    let a = ln_point(lo.magnitude(), x.exp, prec);
    let b = ln_point(hi.magnitude(), x.exp, prec);
    Ok(a.hull(&b))
}

fn ln_point(m: &BigUint, e: i64, prec: u64) -> Real {
    let b = m.bits();
    let mut s = b - 1;
    // Keep the reduced argument m / 2^s in [2/3, 4/3).
    if m * 3u32 >= BigUint::one() << (s as usize + 2) {
        s = b;
    }
    let k = s as i64 + e;
    let p = prec + 16 + 64;
    let pow = BigInt::one() << s as usize;
    let mi = BigInt::from(m.clone());
    let y = ((&mi - &pow) << p as usize) / (&mi + &pow);
    let y2 = (&y * &y) >> p as usize;
    let mut pw = y;
    let mut sum = BigInt::zero();
    let mut terms = 0u64;
    let mut i = 0u64;
    while !pw.is_zero() {
        sum += &pw / (2 * i + 1);
        pw = shr_trunc(&pw * &y2, p);
        i += 1;
        terms += 1;
    }
    let lnf = Real {
        mid: sum * 2,
        rad: BigUint::from(8 * terms + 12),
        exp: -(p as i64),
    };
    let extra = 64 - (k.unsigned_abs()).leading_zeros() as u64;
    let kl = Real::from_int(k).mul(&ln2(prec + extra + 8), prec + extra + 8);
    kl.add(&lnf, prec + 8).normalize(prec)
}

/// Exponential of a ball; arguments are limited to magnitude below `2^40`.
pub fn exp(x: &Real, prec: u64) -> Result<Real> {
    if x.is_exact() {
        return exp_point(&x.mid, x.exp, prec);
    }
    let (lo, hi) = endpoints(x);
    let a = exp_point(&lo, x.exp, prec)?;
    let b = exp_point(&hi, x.exp, prec)?;
    Ok(a.hull(&b))
}

fn exp_point(m: &BigInt, e: i64, prec: u64) -> Result<Real> {
    if m.is_zero() {
        return Ok(Real::from_int(1));
    }
    if m.bits() as i64 + e > 40 {
        return Err(Error::Precision("exponential argument out of range".into()));
    }
    let v = int_to_f64(m, e);
    let q = (v / std::f64::consts::LN_2).round() as i64;
    let extra = 64 - q.unsigned_abs().leading_zeros() as u64;
    let p = prec + 32 + extra;
    let x = Real {
        mid: m.clone(),
        rad: BigUint::zero(),
        exp: e,
    };
    let r = x.sub(&Real::from_int(q).mul(&ln2(p + 8), p + 8), p);
    // Taylor series of e^{r / 2^16} in fixed point, then 16 squarings.
    let p2 = p + 16;
    let (rm, rr) = r.at_exp(-(p2 as i64) + 16);
    let s = rm;
    let one = BigInt::one() << p2 as usize;
    let mut sum = one.clone();
    let mut term = one;
    let mut terms = 0u64;
    let mut i = 1u64;
    loop {
        term = shr_trunc(&term * &s, p2) / i;
        if term.is_zero() {
            break;
        }
        sum += &term;
        terms += 1;
        i += 1;
    }
    let mut y = Real {
        mid: sum,
        rad: BigUint::from(2 * terms + 4) + rr * 2u32,
        exp: -(p2 as i64),
    };
    for _ in 0..16 {
        y = y.mul(&y, p2);
    }
    Ok(y.mul_pow2(q).normalize(prec))
}

/// `x^y` for a positive ball `x`.
pub fn powr(x: &Real, y: &Real, prec: u64) -> Result<Real> {
    let l = ln(x, prec + 16)?;
    exp(&l.mul(y, prec + 16), prec)
}

enum Trig {
    Sin,
    Cos,
}

/// `sin(pi q)` for an exact rational `q`.
pub fn sin_pi(q: &BigRational, prec: u64) -> Real {
    trig_pi(q, prec, true)
}

/// `cos(pi q)` for an exact rational `q`.
pub fn cos_pi(q: &BigRational, prec: u64) -> Real {
    trig_pi(q, prec, false)
}

fn trig_pi(q: &BigRational, prec: u64, sine: bool) -> Real {
    let two = BigRational::from_integer(2.into());
    let one = BigRational::one();
    let half = BigRational::new(1.into(), 2.into());
    let quarter = BigRational::new(1.into(), 4.into());
    // cos(pi q) = sin(pi (q + 1/2))
    let q = if sine { q.clone() } else { q + &half };
    let mut t = &q - &two * (&q / &two).floor();
    let mut negate = false;
    if t >= one {
        t -= &one;
        negate = true;
    }
    if t > half {
        t = &one - &t;
    }
    let (kind, u) = if t > quarter {
        (Trig::Cos, &half - &t)
    } else {
        (Trig::Sin, t)
    };
    let v = trig_reduced(kind, &u, prec);
    if negate {
        v.neg()
    } else {
        v
    }
}

/// `sin(pi u)` or `cos(pi u)` for `0 <= u <= 1/4`.
fn trig_reduced(kind: Trig, u: &BigRational, prec: u64) -> Real {
    if u.is_zero() {
        return Real::from_int(match kind {
            Trig::Sin => 0,
            Trig::Cos => 1,
        });
    }
    let p = prec + 16;
    let theta = pi(p + 8).mul(&Real::from_rational(u, p + 8), p + 8);
    let (tm, tr) = theta.at_exp(-(p as i64));
    let t2 = (&tm * &tm) >> p as usize;
    let one = BigInt::one() << p as usize;
    let mut sum = one.clone();
    let mut term = one;
    let mut terms = 0u64;
    let offset = match kind {
        Trig::Sin => 1,
        Trig::Cos => 0,
    };
    let mut i = 1u64;
    loop {
        let d = (2 * i - 1 + offset) * (2 * i + offset);
        term = ((&term * &t2) >> p as usize) / d;
        if term.is_zero() {
            break;
        }
        if i % 2 == 1 {
            sum -= &term;
        } else {
            sum += &term;
        }
        terms += 1;
        i += 1;
    }
    // Both series have derivative at most 1 in theta on [0, pi/4].
    let series = Real {
        mid: sum,
        rad: BigUint::from(3 * terms + 4) + tr,
        exp: -(p as i64),
    };
    match kind {
        Trig::Sin => theta.mul(&series, p).normalize(prec),
        Trig::Cos => series.normalize(prec),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(p: i64, d: i64) -> BigRational {
        BigRational::new(p.into(), d.into())
    }

    fn close(x: &Real, v: f64, tol: f64) {
        let (lo, hi) = x.to_f64_bounds();
        assert!(lo <= v + tol && v - tol <= hi, "{v} not in [{lo}, {hi}]");
        assert!(hi - lo < 1e-12 * v.abs().max(1.0), "ball too wide: [{lo}, {hi}]");
    }

    #[test]
    fn constants_match_known_digits() {
        let p = pi(200);
        assert!(p.to_decimal(40).starts_with("3.14159265358979323846264338327950288419"));
        assert!(p.lower() < p.upper());
        let l = ln2(200);
        assert!(l.to_decimal(30).starts_with("0.6931471805599453094172321214"));
    }

    #[test]
    fn elementary_functions() {
        let prec = 120;
        close(&ln(&Real::from_int(10), prec).unwrap(), 10f64.ln(), 1e-15);
        close(&ln(&Real::from_rational(&q(1, 3), prec), prec).unwrap(), (1.0f64 / 3.0).ln(), 1e-15);
        close(&exp(&Real::from_int(1), prec).unwrap(), std::f64::consts::E, 1e-15);
        close(&exp(&Real::from_rational(&q(-7, 2), prec), prec).unwrap(), (-3.5f64).exp(), 1e-17);
        close(&sin_pi(&q(1, 3), prec), (3f64).sqrt() / 2.0, 1e-15);
        close(&cos_pi(&q(1, 3), prec), 0.5, 1e-15);
        close(&sin_pi(&q(7, 6), prec), -0.5, 1e-15);
        close(&sin_pi(&q(-1, 6), prec), -0.5, 1e-15);
        close(&cos_pi(&q(5, 4), prec), -(0.5f64).sqrt(), 1e-15);
    }

    #[test]
    fn tiny_sine_keeps_relative_precision() {
        let u = BigRational::new(1.into(), BigInt::one() << 3000usize);
        let s = sin_pi(&u, 100);
        assert!(s.has_relative_accuracy(25));
        let l = ln(&s, 100).unwrap();
        let expected = std::f64::consts::PI.ln() - 3000.0 * std::f64::consts::LN_2;
        close(&l, expected, 1e-12);
    }

    #[test]
    fn division_and_certification() {
        let x = Real::from_int(1).div(&Real::from_int(3), 100).unwrap();
        assert!(x.lower() <= q(1, 3) && q(1, 3) <= x.upper());
        let zero_ball = Real::from_int(0);
        assert!(Real::from_int(1).div(&zero_ball, 100).is_err());
        let v = certify(30, |p| Ok(pi(p)), |r| vec![r]).unwrap();
        assert_eq!(v.to_decimal(10), "3.141592654");
    }

    #[test]
    fn decimal_formatting() {
        assert_eq!(format_decimal(&q(1, 3), 5), "0.33333");
        assert_eq!(format_decimal(&q(-2, 3), 3), "-0.667");
        assert_eq!(format_decimal(&q(12345, 1), 3), "12300");
        assert_eq!(format_decimal(&crate::numerics::pow2(-100), 3), "7.89e-31");
        assert_eq!(format_decimal(&q(1, 1), 4), "1.000");
    }
}
