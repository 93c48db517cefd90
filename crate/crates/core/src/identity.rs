//! Partial products of the tangent product, their tail factors, and the
//! Bell-number series as a cross-checked utility.

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::expansion::{DigitProgram, Distance, RunLength};
use crate::numerics::ball::{self, certify, Real};
use crate::numerics::pow2;

/// One stage of `prod_{j=0}^n |tan 2^j pi x|^{2^-j}`.
#[derive(Clone, Debug)]
pub struct ProductTrace {
    pub n: u64,
    pub partial: Real,
    /// `|sin 2^{n+1} pi x|^{2^-n}`.
    pub tail: Real,
    /// `(2 sin pi x)^2`.
    pub target: Real,
}

impl ProductTrace {
    /// Upper bound on `|partial - target|`.
    pub fn error_bound(&self) -> BigRational {
        let a = &self.partial.upper() - &self.target.lower();
        let b = &self.target.upper() - &self.partial.lower();
        a.max(b)
    }
}

/// Enclosure of `ln |sin(pi x)|` where `x` is the value of `p`.
///
/// Only the distance from `x` to the nearest integer enters, read off the
/// expansion as `2^-shift * mu`, so arbitrarily long runs cost nothing.
fn ln_sin_pi(p: &DigitProgram, prec: u64) -> Result<Real> {
    let nd = p.nearest_dyadic_with(0, prec + 16);
    let wp = prec + 16;
    match nd.distance {
        Distance::Exact(d) => {
            if d.is_zero() {
                return Err(Error::domain("sine vanishes at a dyadic point"));
            }
            ball::ln(&ball::sin_pi(&d, wp), prec)
        }
        Distance::Scaled { shift, lo, hi } => {
            let small = shift.to_u64().filter(|s| *s <= prec + 8);
            if let Some(s) = small {
                // sin(pi d) is increasing on [0, 1/2].
                let f = pow2(-(s as i64));
                let a = ball::sin_pi(&(&lo * &f), wp);
                let b = ball::sin_pi(&(&hi * &f), wp);
                return ball::ln(&a.hull(&b), prec);
            }
            let guard = shift.bits() + 8;
            let mu = ball::ln(&Real::from_bounds(&lo, &hi, wp), wp)?;
            let shifted = Real::from_int(BigInt::from(shift.clone())).mul(&ball::ln2(wp + guard), wp + guard);
            // ln(sin y / y) lies in [-2^{2 - 2 shift}, 0]; shift exceeds prec here.
            let delta = Real::from_bounds(&-pow2(-2 * (prec as i64 + 8)), &BigRational::zero(), wp);
            let v = ball::ln(&ball::pi(wp), wp)?
                .add(&mu, wp + guard)
                .sub(&shifted, wp + guard)
                .add(&delta, wp + guard);
            Ok(v.normalize(prec))
        }
    }
}

fn check_non_dyadic(p: &DigitProgram) -> Result<()> {
    if p.is_dyadic() {
        return Err(Error::domain(format!(
            "{p} denotes a dyadic rational, where a tangent factor is undefined"
        )));
    }
    Ok(())
}

fn trace_at(p: &DigitProgram, n: u64, prec: u64) -> Result<ProductTrace> {
    let wp = prec + 32;
    let lx = ln_sin_pi(p, wp)?;
    let lt = ln_sin_pi(&p.shift(n + 1), wp)?;
    let inv = Real::from_int(1).mul_pow2(-(n as i64));
    let ln2 = ball::ln2(wp);
    // (2 - 2^-n) ln 2 + 2 ln sin(pi x) - 2^-n ln |sin(2^{n+1} pi x)|
    let e = Real::from_int(2).sub(&inv, wp);
    let lt_scaled = lt.mul_pow2(-(n as i64));
    let ln_partial = e.mul(&ln2, wp).add(&lx.mul_pow2(1), wp).sub(&lt_scaled, wp);
    let ln_target = ln2.mul_pow2(1).add(&lx.mul_pow2(1), wp);
    Ok(ProductTrace {
        n,
        partial: ball::exp(&ln_partial, prec)?,
        tail: ball::exp(&lt_scaled, prec)?,
        target: ball::exp(&ln_target, prec)?,
    })
}

/// Stage `n` of the partial product, with `digits` certified significant digits per field.
pub fn partial_product(p: &DigitProgram, n: u64, digits: u32) -> Result<ProductTrace> {
    check_non_dyadic(p)?;
    certify(digits, |prec| trace_at(p, n, prec), |t| vec![&t.partial, &t.tail, &t.target])
}

/// Stages `0..=n`.
pub fn product_trace(p: &DigitProgram, n: u64, digits: u32) -> Result<Vec<ProductTrace>> {
    (0..=n).map(|k| partial_product(p, k, digits)).collect()
}

/// Two-sided certified bounds on `|sin 2^{n+1} pi x|^{2^-n}` from `z_{n+1}` alone.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TailBound {
    pub lower: f64,
    pub upper: f64,
}

/// Bounds from `2^{-L} <= |sin 2^{n+1} pi x| <= pi 2^{-L}` with `L = z_{n+1}`.
///
/// Stage `n = 0` is accepted; the bound is then the plain sine estimate.
pub fn tail_factor_bound(p: &DigitProgram, n: u64) -> TailBound {
    let l = match p.run_length(n + 1) {
        RunLength::Unbounded => return TailBound { lower: 0.0, upper: 0.0 },
        RunLength::Finite(l) => l,
    };
    let prec = 64;
    let guard = l.bits() + 16;
    let lbig = Real::from_int(BigInt::from(l));
    let ln2 = ball::ln2(prec + guard);
    let log_lo = lbig.mul(&ln2, prec + guard).neg();
    let log_hi = ball::ln(&ball::pi(prec), prec)
        .expect("pi is positive")
        .add(&log_lo, prec + guard);
    let eval = |v: Real| -> (f64, f64) {
        match ball::exp(&v.mul_pow2(-(n as i64)), prec) {
            Ok(r) => r.to_f64_bounds(),
            // Arguments below -2^40: the value is far under the smallest float.
            Err(_) => (0.0, f64::MIN_POSITIVE),
        }
    };
    let lower = eval(log_lo).0.max(0.0);
    let upper = eval(log_hi).1.min(1.0);
    TailBound { lower, upper }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BellMode {
    Recurrence,
    /// Dobiński series truncated after `K` terms.
    Series(u64),
}

#[derive(Clone, Debug)]
pub enum BellValue {
    Exact(BigUint),
    Series {
        value: Real,
        /// Upper bound on `B_n - value`, the neglected part of the series.
        truncation: BigRational,
    },
}

/// `B_0 ..= B_n` from `B_{m+1} = sum_k C(m, k) B_k`.
pub fn bell_numbers(n: usize) -> Vec<BigUint> {
    let mut bells = vec![BigUint::one()];
    for m in 0..n {
        let mut binom = BigUint::one();
        let mut next = BigUint::zero();
        for (k, b) in bells.iter().enumerate() {
            next += &binom * b;
            binom = binom * BigUint::from(m - k) / BigUint::from(k + 1);
        }
        bells.push(next);
    }
    bells
}

/// `n`-th Bell number, exactly or from `e^{-1} sum_{k <= K} k^n / k!` with `digits` correct digits.
pub fn bell_number(n: u64, mode: BellMode, digits: u32) -> Result<BellValue> {
    match mode {
        BellMode::Recurrence => {
            let n = usize::try_from(n).map_err(|_| Error::domain("index too large"))?;
            Ok(BellValue::Exact(bell_numbers(n).pop().expect("non-empty")))
        }
        BellMode::Series(k) => {
            if k < n {
                return Err(Error::domain(format!("series mode needs K >= n (K = {k}, n = {n})")));
            }
            let term = |j: u64| -> BigRational {
                let mut fact = BigInt::one();
                for i in 2..=j {
                    fact *= i;
                }
                BigRational::new(BigInt::from(j).pow(n as u32), fact)
            };
            let n32 = u32::try_from(n).map_err(|_| Error::domain("index too large"))?;
            let mut partial = BigRational::zero();
            for j in 0..=k {
                partial += term(j);
            }
            // Terms beyond K, using the ratio (1 + 1/j)^n / (j + 1), which decreases in j.
            let half = BigRational::new(1.into(), 2.into());
            let mut tail = BigRational::zero();
            let mut j = k;
            let mut t = term(j);
            loop {
                let ratio = BigRational::new(BigInt::from(j + 1).pow(n32), BigInt::from(j).pow(n32) * (j + 1));
                t = &t * &ratio;
                tail += &t;
                j += 1;
                if ratio <= half {
                    tail += &t;
                    break;
                }
            }
            let value = certify(
                digits,
                |prec| {
                    let e_inv = ball::exp(&Real::from_int(-1), prec + 16)?;
                    Ok(Real::from_rational(&partial, prec + 16).mul(&e_inv, prec))
                },
                |v| vec![v],
            )?;
            // 1/e < 1/2
            Ok(BellValue::Series {
                value,
                truncation: tail * half,
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(s: &str) -> DigitProgram {
        s.parse().unwrap()
    }

    #[test]
    fn one_third_partial_product_is_a_power_of_three() {
        let t = partial_product(&p("periodic:;01"), 4, 20).unwrap();
        // 3^{1 - 2^-5}
        let expect = 3f64.powf(1.0 - 1.0 / 32.0);
        assert!((t.partial.to_f64() - expect).abs() < 1e-14);
        assert!((t.target.to_f64() - 3.0).abs() < 1e-14);
        assert!(t.partial.has_relative_accuracy(20));
    }

    #[test]
    fn dyadic_inputs_are_rejected() {
        assert!(partial_product(&p("finite:1"), 3, 10).is_err());
        assert!(partial_product(&p("periodic:01;1"), 3, 10).is_err());
    }

    #[test]
    fn tail_bounds_on_long_runs() {
        let g = p("schedule:fill=0;geom(n1=1,ratio=2,k=1,digit=0)");
        for (n, expect) in [(0u64, std::f64::consts::PI / 4.0), (3, std::f64::consts::PI.powf(0.125) / 4.0)] {
            let b = tail_factor_bound(&g, n);
            assert!((b.upper - expect).abs() < 1e-12, "{n}: {b:?}");
            assert!(b.lower <= b.upper);
        }
        let b = tail_factor_bound(&g, 20);
        assert!(b.upper < 0.2501 && b.upper > 0.25);
    }

    #[test]
    fn tail_bound_brackets_true_tail() {
        let x = p("periodic:;01");
        for n in 1..8 {
            let b = tail_factor_bound(&x, n);
            let t = partial_product(&x, n, 15).unwrap().tail.to_f64();
            assert!(b.lower <= t && t <= b.upper, "n={n} {b:?} {t}");
        }
    }

    #[test]
    fn bell_values() {
        let b = bell_numbers(10);
        let small: Vec<u64> = b.iter().map(|v| v.to_u64().unwrap()).collect();
        assert_eq!(small, vec![1, 1, 2, 5, 15, 52, 203, 877, 4140, 21147, 115975]);
        match bell_number(10, BellMode::Series(40), 15).unwrap() {
            BellValue::Series { value, truncation } => {
                assert!((value.to_f64() - 115975.0).abs() < 1e-4);
                assert!(truncation < BigRational::new(1.into(), 1000.into()));
            }
            other => panic!("{other:?}"),
        }
        assert!(bell_number(10, BellMode::Series(5), 10).is_err());
    }
}
