//! Stage families of limsup sets built on the dyadic grids `{k/2^n}`,
//! gauge dilation, membership tests and the quasi-independence audit.

use std::fmt;

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::expansion::{DigitProgram, Distance};
use crate::gauge::{gauge_eval, GaugeSpec};
use crate::numerics::ball::{self, Real};
use crate::numerics::{
    format_rational, parse_rational, pow2, Dyadic, Interval, IntervalFamily, Measure, Radius, ScaleExponent,
};

/// Resource limits shared by enumerating operations.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Limits {
    /// Largest radius exponent `E` (radius `2^{-E}`) that is materialized.
    pub exponent_cap: u64,
    /// Largest grid level `n` whose `2^n + 1` centers are enumerated.
    pub max_level: u64,
}

impl Default for Limits {
    fn default() -> Self {
        Limits {
            exponent_cap: 1 << 20,
            max_level: 20,
        }
    }
}

/// `phi(n)` in closed form.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum PhiSpec {
    Constant(BigRational),
    /// `2^{-n alpha}`.
    PowerDecay(BigRational),
    /// `2^n 2^{-2^n / k}`.
    DoubleExp(u64),
    /// `2^{-2^{n alpha}}`.
    TowerDecay(BigRational),
}

fn exact_log2(q: &BigRational) -> Option<BigRational> {
    let d = Dyadic::from_rational(q)?;
    if d.numerator() == &BigInt::one() {
        return Some(BigRational::from_integer(-BigInt::from(d.exponent())));
    }
    let n = q.to_integer();
    (q.is_integer() && n.is_positive() && n.magnitude().count_ones() == 1)
        .then(|| BigRational::from_integer(BigInt::from(n.bits() - 1)))
}

/// `2^{x}` for a rational `x`, as a ball.
fn pow2_ball(x: &BigRational, prec: u64) -> Result<Real> {
    ball::exp(&Real::from_rational(x, prec + 16).mul(&ball::ln2(prec + 16), prec + 16), prec)
}

impl PhiSpec {
    /// Exact `log2 phi(n)` when it is rational.
    pub fn log2_phi(&self, n: u64) -> Option<BigRational> {
        let nq = BigRational::from_integer(n.into());
        match self {
            PhiSpec::Constant(c) => exact_log2(c),
            PhiSpec::PowerDecay(a) => Some(-(nq * a)),
            PhiSpec::DoubleExp(k) => {
                let pow = BigRational::from_integer(BigInt::one() << n as usize);
                Some(nq - pow / BigRational::from_integer((*k).into()))
            }
            PhiSpec::TowerDecay(a) => {
                let na = nq * a;
                na.is_integer()
                    .then(|| na.to_integer().to_usize())
                    .flatten()
                    .map(|e| BigRational::from_integer(-(BigInt::one() << e)))
            }
        }
    }

    /// `log2 phi(n)` as a ball.
    pub fn log2_phi_ball(&self, n: u64, prec: u64) -> Result<Real> {
        if let Some(q) = self.log2_phi(n) {
            return Ok(Real::from_rational(&q, prec));
        }
        match self {
            PhiSpec::Constant(c) => {
                ball::ln(&Real::from_rational(c, prec + 16), prec + 16)?.div(&ball::ln2(prec + 16), prec)
            }
            PhiSpec::TowerDecay(a) => Ok(pow2_ball(&(BigRational::from_integer(n.into()) * a), prec)?.neg()),
            _ => unreachable!("rational for the remaining classes"),
        }
    }
}

impl std::str::FromStr for PhiSpec {
    type Err = Error;

    /// `const:<c>`, `power:<alpha>`, `dexp:<k>` or `tower:<alpha>`.
    fn from_str(text: &str) -> Result<Self> {
        let (kind, arg) = text
            .split_once(':')
            .ok_or_else(|| Error::parse(format!("phi must look like kind:<parameter>, got {text:?}")))?;
        let pos = || -> Result<BigRational> {
            let v = parse_rational(arg)?;
            if !v.is_positive() {
                return Err(Error::domain(format!("phi parameter {arg} must be positive")));
            }
            Ok(v)
        };
        match kind.trim() {
            "const" => Ok(PhiSpec::Constant(pos()?)),
            "power" => Ok(PhiSpec::PowerDecay(pos()?)),
            "dexp" => {
                let k: u64 = arg.trim().parse().map_err(|_| Error::parse(format!("bad k {arg:?}")))?;
                if k == 0 {
                    return Err(Error::domain("k must be positive"));
                }
                Ok(PhiSpec::DoubleExp(k))
            }
            "tower" => Ok(PhiSpec::TowerDecay(pos()?)),
            other => Err(Error::parse(format!("unknown phi {other:?}"))),
        }
    }
}

impl fmt::Display for PhiSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PhiSpec::Constant(c) => write!(f, "const:{}", format_rational(c)),
            PhiSpec::PowerDecay(a) => write!(f, "power:{}", format_rational(a)),
            PhiSpec::DoubleExp(k) => write!(f, "dexp:{k}"),
            PhiSpec::TowerDecay(a) => write!(f, "tower:{}", format_rational(a)),
        }
    }
}

/// `omega(n)` for the uniform grid sets.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum OmegaSpec {
    Constant(BigRational),
    /// `c / n`.
    Harmonic(BigRational),
}

impl OmegaSpec {
    pub fn at(&self, n: u64) -> BigRational {
        match self {
            OmegaSpec::Constant(c) => c.clone(),
            OmegaSpec::Harmonic(c) => c / BigRational::from_integer(n.max(1).into()),
        }
    }
}

impl fmt::Display for OmegaSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            OmegaSpec::Constant(c) => write!(f, "{}", format_rational(c)),
            OmegaSpec::Harmonic(c) => write!(f, "harmonic:{}", format_rational(c)),
        }
    }
}

impl std::str::FromStr for OmegaSpec {
    type Err = Error;

    /// `<c>` or `harmonic:<c>`.
    fn from_str(text: &str) -> Result<Self> {
        let (harmonic, arg) = match text.trim().strip_prefix("harmonic:") {
            Some(a) => (true, a),
            None => (false, text),
        };
        let c = parse_rational(arg)?;
        if !c.is_positive() {
            return Err(Error::domain("omega must be positive"));
        }
        Ok(if harmonic { OmegaSpec::Harmonic(c) } else { OmegaSpec::Constant(c) })
    }
}

/// A limsup set `limsup_n U_n` given by the radius attached to `Q_n = {k/2^n}`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SetSpec {
    /// Radius `2^{-2^n/k}`.
    DobinskiK(u64),
    /// Radius `omega(n)/2^n`.
    UniformGrid(OmegaSpec),
    /// Radius `2^{-n(1+alpha)}`.
    RunAtLeast(BigRational),
    /// Radius `2^{-(n + 2^{n alpha})}`.
    RunAtLeastExp(BigRational),
    /// Radius `phi(n)/2^n`.
    BPhi(PhiSpec),
}

impl std::str::FromStr for SetSpec {
    type Err = Error;

    /// `dobinski:<k>`, `grid:<omega>`, `run:<alpha>`, `runexp:<alpha>` or `bphi:<phi>`.
    fn from_str(text: &str) -> Result<Self> {
        let (kind, arg) = text
            .split_once(':')
            .ok_or_else(|| Error::parse(format!("set must look like kind:<parameter>, got {text:?}")))?;
        let alpha = || -> Result<BigRational> {
            let a = parse_rational(arg)?;
            if !a.is_positive() {
                return Err(Error::domain("alpha must be positive"));
            }
            Ok(a)
        };
        match kind.trim() {
            "dobinski" => {
                let k: u64 = arg.trim().parse().map_err(|_| Error::parse(format!("bad k {arg:?}")))?;
                if k == 0 {
                    return Err(Error::domain("k must be positive"));
                }
                Ok(SetSpec::DobinskiK(k))
            }
            "grid" => Ok(SetSpec::UniformGrid(arg.parse()?)),
            "run" => Ok(SetSpec::RunAtLeast(alpha()?)),
            "runexp" => Ok(SetSpec::RunAtLeastExp(alpha()?)),
            "bphi" => Ok(SetSpec::BPhi(arg.parse()?)),
            other => Err(Error::parse(format!("unknown set {other:?}"))),
        }
    }
}

impl fmt::Display for SetSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SetSpec::DobinskiK(k) => write!(f, "dobinski:{k}"),
            SetSpec::UniformGrid(w) => write!(f, "grid:{w}"),
            SetSpec::RunAtLeast(a) => write!(f, "run:{}", format_rational(a)),
            SetSpec::RunAtLeastExp(a) => write!(f, "runexp:{}", format_rational(a)),
            SetSpec::BPhi(p) => write!(f, "bphi:{p}"),
        }
    }
}

fn cap_error(e: impl fmt::Display, cap: u64) -> Error {
    Error::ExponentCap {
        exponent: e.to_string(),
        cap,
    }
}

fn check_cap(e: &BigRational, cap: u64) -> Result<()> {
    if e > &BigRational::from_integer(cap.into()) {
        return Err(cap_error(format_rational(e), cap));
    }
    Ok(())
}

/// `2^{-(n + 2^x)}`: exact for integral `x`, otherwise bracketed between the
/// neighbouring integral exponents.
fn tower_radius(n: u64, x: &BigRational, cap: u64) -> Result<Radius> {
    if x > &BigRational::from_integer(64.into()) {
        return Err(cap_error(format!("{n} + 2^({})", format_rational(x)), cap));
    }
    let p = x.numer().to_u32().expect("bounded above");
    let q = x.denom().to_u32().ok_or_else(|| cap_error(format_rational(x), cap))?;
    // floor(2^{p/q}) = floor((2^p)^{1/q})
    let fl = (BigUint::one() << p as usize).nth_root(q);
    let base = BigUint::from(n) + &fl;
    let e_floor = BigRational::from_integer(base.clone().into());
    check_cap(&e_floor, cap)?;
    if x.is_integer() {
        return Ok(Radius::Pow2(ScaleExponent::new(e_floor)?));
    }
    let e_ceil = BigRational::from_integer((base + 1u32).into());
    check_cap(&e_ceil, cap)?;
    let k = |e: &BigRational| pow2(-e.to_integer().to_i64().expect("capped"));
    Ok(Radius::Enclosed {
        lo: k(&e_ceil),
        hi: k(&e_floor),
    })
}

fn pow2_radius(e: BigRational, cap: u64) -> Result<Radius> {
    check_cap(&e.ceil(), cap)?;
    Ok(Radius::Pow2(ScaleExponent::new(e)?))
}

/// Radius attached to the level-`n` grid.
pub fn stage_radius(spec: &SetSpec, n: u64, limits: &Limits) -> Result<Radius> {
    let cap = limits.exponent_cap;
    let nq = BigRational::from_integer(n.into());
    match spec {
        SetSpec::DobinskiK(k) => {
            if n > 64 + 64 - k.leading_zeros() as u64 {
                return Err(cap_error(format!("2^{n}/{k}"), cap));
            }
            let pow = BigRational::from_integer(BigInt::one() << n as usize);
            pow2_radius(pow / BigRational::from_integer((*k).into()), cap)
        }
        SetSpec::UniformGrid(w) => {
            let r = w.at(n) * pow2(-(n as i64));
            Ok(match exact_log2(&r) {
                Some(l) => Radius::Pow2(ScaleExponent::new(-l)?),
                None => Radius::Rational(r),
            })
        }
        SetSpec::RunAtLeast(a) => pow2_radius(nq * (BigRational::one() + a), cap),
        SetSpec::RunAtLeastExp(a) => tower_radius(n, &(nq * a), cap),
        SetSpec::BPhi(phi) => match phi {
            PhiSpec::Constant(c) => stage_radius(&SetSpec::UniformGrid(OmegaSpec::Constant(c.clone())), n, limits),
            PhiSpec::TowerDecay(a) => tower_radius(n, &(nq * a), cap),
            _ => {
                let l = phi.log2_phi(n).expect("rational log for this class");
                pow2_radius(nq - l, cap)
            }
        },
    }
}

/// The level-`n` family: balls around every `k/2^n` in `[0,1]`.
pub fn stage_family(spec: &SetSpec, n: u64, limits: &Limits) -> Result<IntervalFamily> {
    if n == 0 {
        return Err(Error::domain("stages start at n = 1"));
    }
    let radius = stage_radius(spec, n, limits)?;
    if n > limits.max_level {
        return Err(Error::NonEnumerable {
            generation: n as usize,
            reason: format!("2^{n} + 1 centers exceed the enumeration limit 2^{}", limits.max_level),
        });
    }
    let members = (0..=(1u64 << n))
        .map(|k| Interval::new(Dyadic::new(k, n), radius.clone()))
        .collect::<Result<Vec<_>>>()?;
    Ok(IntervalFamily::new(members))
}

fn real_bounds(r: &Real) -> (BigRational, BigRational) {
    (r.lower(), r.upper())
}

/// Same centers, each radius `r` replaced by `h(r)`.
pub fn dilate_by_gauge(f: &IntervalFamily, h: &GaugeSpec) -> Result<IntervalFamily> {
    const PREC: u64 = 128;
    let one = BigRational::one();
    let mut out = Vec::with_capacity(f.len());
    let mut last: Option<(Radius, Radius)> = None;
    for iv in f.members() {
        if let Some((from, to)) = &last {
            if from == &iv.radius {
                out.push(Interval::new(iv.center.clone(), to.clone())?);
                continue;
            }
        }
        let (_, hi) = iv.radius.bounds(64)?;
        if hi >= one {
            return Err(Error::domain("gauge dilation needs radii below 1"));
        }
        let new = match (h, &iv.radius) {
            (GaugeSpec::Power(s), r) if r.scale().is_some() => {
                Radius::Pow2(r.scale().expect("checked").scaled(s)?)
            }
            (GaugeSpec::Power(s), Radius::Rational(r)) if s.is_integer() => {
                Radius::Rational(num_traits::pow(r.clone(), s.to_integer().to_usize().unwrap_or(0)))
            }
            (_, r) => {
                let (lo, hi) = real_bounds(&gauge_eval(h, r, PREC)?);
                Radius::Enclosed { lo, hi }
            }
        };
        out.push(Interval::new(iv.center.clone(), new.clone())?);
        last = Some((iv.radius.clone(), new));
    }
    Ok(IntervalFamily::new(out))
}

/// Three-valued answer of an enclosure-based comparison.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Tri {
    True,
    False,
    Unknown,
}

impl fmt::Display for Tri {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Tri::True => "true",
            Tri::False => "false",
            Tri::Unknown => "unknown",
        })
    }
}

/// A positive magnitude `a 2^{-s}`.
struct Mag {
    a: BigRational,
    s: BigInt,
}

/// Decides `a 2^{-s} < 2^{-e}` exactly for rational `e = p/q`.
fn lt_pow2_neg(m: &Mag, e: &BigRational) -> bool {
    let q = e.denom().to_u32().expect("moderate denominator");
    // a^q < 2^{s q - p}
    let t: BigInt = &m.s * e.denom() - e.numer();
    let num = m.a.numer().pow(q);
    let den = m.a.denom().pow(q);
    let (nb, db) = (BigInt::from(num.bits()), BigInt::from(den.bits()));
    if nb <= &db - 1 + &t {
        return true;
    }
    if &nb - 1 >= &db + &t {
        return false;
    }
    let t = t.to_i64().expect("within a few bits of the operand sizes");
    if t >= 0 {
        num < den << t as usize
    } else {
        (num << (-t) as usize) < den
    }
}

/// Decides `a 2^{-s} < r` for a positive rational `r`.
fn lt_rational(m: &Mag, r: &BigRational) -> bool {
    let rb = BigInt::from(r.numer().bits()) - BigInt::from(r.denom().bits());
    // r >= 2^{rb - 1}; a 2^{-s} < 2^{bits(a) - s}
    let ab = BigInt::from(m.a.numer().bits()) - BigInt::from(m.a.denom().bits()) + 1;
    if &ab - &m.s <= &rb - 2 {
        return true;
    }
    if &ab - &m.s >= &rb + 4 {
        // a 2^{-s} >= 2^{ab - 2 - s} >= 2^{rb + 2} > r
        return false;
    }
    let s = m.s.to_i64().expect("close to the size of r");
    &m.a * pow2(-s) < *r
}

fn lt_radius(m: &Mag, r: &Radius, upper: bool) -> Result<bool> {
    Ok(match r {
        Radius::Pow2(e) => lt_pow2_neg(m, e.value()),
        Radius::Rational(q) => lt_rational(m, q),
        Radius::Enclosed { lo, hi } => lt_rational(m, if upper { hi } else { lo }),
    })
}

/// Whether `|x - P_n(x)|` is below the level-`n` radius of `spec`.
pub fn membership_in_stage(p: &DigitProgram, spec: &SetSpec, n: u64, limits: &Limits) -> Result<Tri> {
    let radius = stage_radius(spec, n, limits)?;
    let (dlo, dhi) = match p.nearest_dyadic(n).distance {
        Distance::Exact(d) if d.is_zero() => return Ok(Tri::True),
        Distance::Exact(d) => (
            Mag { a: d.clone(), s: BigInt::zero() },
            Mag { a: d, s: BigInt::zero() },
        ),
        Distance::Scaled { shift, lo, hi } => {
            let s = BigInt::from(shift);
            (Mag { a: lo, s: s.clone() }, Mag { a: hi, s })
        }
    };
    // Certainly below: the largest distance beats the smallest radius.
    if lt_radius(&dhi, &radius, false)? {
        return Ok(Tri::True);
    }
    // Certainly not below: even the smallest distance reaches the largest radius.
    if !lt_radius(&dlo, &radius, true)? {
        return Ok(Tri::False);
    }
    Ok(Tri::Unknown)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct QuasiPair {
    pub n: u64,
    pub m: u64,
    pub measure_n: BigRational,
    pub measure_m: BigRational,
    pub measure_both: BigRational,
    pub ratio: BigRational,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct QuasiAudit {
    pub pairs: Vec<QuasiPair>,
    pub max_ratio: BigRational,
    pub argmax: (u64, u64),
    /// Largest number of level members sharing a point, over all levels.
    pub overlap_constant: usize,
}

fn exact(m: Measure) -> Result<BigRational> {
    m.exact()
        .cloned()
        .ok_or_else(|| Error::Precision("measure of rational-radius family is not exact".into()))
}

/// Exact ratios `|U_n cap U_m| / (|U_n| |U_m|)` for `1 <= n < m <= nmax`.
pub fn quasi_independence_audit(omega: &OmegaSpec, nmax: u64, limits: &Limits) -> Result<QuasiAudit> {
    let half = BigRational::new(1.into(), 2.into());
    for n in 1..=nmax {
        let w = omega.at(n);
        if !w.is_positive() || w > half {
            return Err(Error::domain(format!(
                "omega({n}) = {} must lie in (0, 1/2]",
                format_rational(&w)
            )));
        }
    }
    let spec = SetSpec::UniformGrid(omega.clone());
    let mut families = Vec::new();
    let mut measures = Vec::new();
    let mut overlap_constant = 0;
    for n in 1..=nmax {
        let f = stage_family(&spec, n, limits)?;
        measures.push(exact(f.exact_measure()?)?);
        overlap_constant = overlap_constant.max(f.max_overlap()?);
        families.push(f);
    }
    let mut pairs = Vec::new();
    for n in 1..=nmax {
        for m in n + 1..=nmax {
            let (i, j) = ((n - 1) as usize, (m - 1) as usize);
            let both = exact(families[i].intersect_measure(&families[j])?)?;
            let ratio = &both / (&measures[i] * &measures[j]);
            pairs.push(QuasiPair {
                n,
                m,
                measure_n: measures[i].clone(),
                measure_m: measures[j].clone(),
                measure_both: both,
                ratio,
            });
        }
    }
    let best = pairs.iter().max_by(|a, b| a.ratio.cmp(&b.ratio));
    let (max_ratio, argmax) = match best {
        Some(p) => (p.ratio.clone(), (p.n, p.m)),
        None => (BigRational::zero(), (0, 0)),
    };
    Ok(QuasiAudit {
        pairs,
        max_ratio,
        argmax,
        overlap_constant,
    })
}

/// Certified upper bound on `sum_{n >= from} |A_{n,k}|`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TailSum {
    pub from: u64,
    /// Exact measures (outer bracket when `k` does not divide `2^n`) per level.
    pub terms: Vec<(u64, BigRational)>,
    /// Bound on the levels beyond the explicit ones.
    pub remainder: BigRational,
    pub total: BigRational,
}

/// Explicit measures for `from..=to`, then a geometric bound on the rest.
///
/// Beyond the explicit levels each stage measure is at most
/// `t_n = 2^{n + 1 - floor(2^n/k)}`; once `2^n >= 3k` consecutive ratios are
/// at most `1/2`, so the remainder is at most `2 t_{to+1}`.
pub fn borel_cantelli_tail(k: u64, from: u64, to: u64, limits: &Limits) -> Result<TailSum> {
    if from == 0 || to < from {
        return Err(Error::domain("need 1 <= from <= to"));
    }
    let mut to = to;
    while (1u128 << (to + 1).min(127)) < 3 * k as u128 {
        to += 1;
    }
    let spec = SetSpec::DobinskiK(k);
    let mut terms = Vec::new();
    let mut total = BigRational::zero();
    for n in from..=to {
        let f = stage_family(&spec, n, limits)?;
        let (_, outer) = f.bracket();
        let m = exact(outer.exact_measure()?)?;
        total += &m;
        terms.push((n, m));
    }
    let n = to + 1;
    if n > 62 {
        return Err(cap_error(format!("2^{n}"), limits.exponent_cap));
    }
    let fl = (1u64 << n) / k;
    let remainder = pow2(n as i64 + 1 - fl as i64) * BigRational::from_integer(2.into());
    total += &remainder;
    Ok(TailSum {
        from,
        terms,
        remainder,
        total,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(a: i64, b: i64) -> BigRational {
        BigRational::new(a.into(), b.into())
    }

    fn lim() -> Limits {
        Limits::default()
    }

    #[test]
    fn stage_examples() {
        let f = stage_family(&SetSpec::DobinskiK(1), 3, &lim()).unwrap();
        assert_eq!(f.len(), 9);
        assert_eq!(f.members()[0].radius, Radius::Pow2(ScaleExponent::from_int(8)));
        assert_eq!(f.exact_measure().unwrap().exact(), Some(&q(1, 16)));
        let g = stage_family(&SetSpec::UniformGrid(OmegaSpec::Constant(q(1, 4))), 2, &lim()).unwrap();
        assert_eq!(g.len(), 5);
        assert_eq!(g.exact_measure().unwrap().exact(), Some(&q(1, 2)));
        let e = stage_family(&SetSpec::RunAtLeast(q(1, 1)), 4, &lim()).unwrap();
        assert_eq!(e.len(), 17);
        assert_eq!(e.members()[3].radius, Radius::Pow2(ScaleExponent::from_int(8)));
    }

    #[test]
    fn caps_and_brackets() {
        assert!(matches!(
            stage_family(&SetSpec::DobinskiK(1), 21, &lim()),
            Err(Error::ExponentCap { .. })
        ));
        let r = stage_radius(&SetSpec::RunAtLeastExp(q(1, 2)), 3, &lim()).unwrap();
        // 3 + 2^{1.5}: floor 5, ceil 6
        assert_eq!(r, Radius::Enclosed { lo: q(1, 64), hi: q(1, 32) });
        let r = stage_radius(&SetSpec::DobinskiK(3), 3, &lim()).unwrap();
        assert_eq!(r, Radius::Pow2(ScaleExponent::parse("8/3").unwrap()));
    }

    #[test]
    fn dilation() {
        let f = stage_family(&SetSpec::DobinskiK(1), 3, &lim()).unwrap();
        assert_eq!(dilate_by_gauge(&f, &GaugeSpec::Power(q(1, 1))).unwrap(), f);
        let half = dilate_by_gauge(&f, &GaugeSpec::Power(q(1, 2))).unwrap();
        assert_eq!(half.members()[0].radius, Radius::Pow2(ScaleExponent::from_int(4)));
        let log = dilate_by_gauge(&f, &GaugeSpec::LogPower(q(1, 1))).unwrap();
        let (lo, hi) = log.members()[0].radius.bounds(0).unwrap();
        let expect = 1.0 / (8.0 * std::f64::consts::LN_2);
        assert!((lo.to_f64().unwrap() - expect).abs() < 1e-15 && (hi.to_f64().unwrap() - expect).abs() < 1e-15);
        let wide = IntervalFamily::new(vec![Interval::new(Dyadic::new(1, 1), Radius::Rational(q(1, 1))).unwrap()]);
        assert!(dilate_by_gauge(&wide, &GaugeSpec::LogPower(q(1, 1))).is_err());
    }

    #[test]
    fn membership() {
        let third: DigitProgram = "periodic:;01".parse().unwrap();
        assert_eq!(membership_in_stage(&third, &SetSpec::DobinskiK(1), 3, &lim()).unwrap(), Tri::False);
        let half: DigitProgram = "finite:1".parse().unwrap();
        for n in 1..5 {
            assert_eq!(membership_in_stage(&half, &SetSpec::DobinskiK(1), n, &lim()).unwrap(), Tri::True);
        }
        let g: DigitProgram = "schedule:fill=0;geom(n1=1,ratio=2,k=1,digit=0)".parse().unwrap();
        for n in [1, 4] {
            assert_eq!(membership_in_stage(&g, &SetSpec::DobinskiK(1), n, &lim()).unwrap(), Tri::True);
        }
    }

    #[test]
    fn quasi_audit_small() {
        let a = quasi_independence_audit(&OmegaSpec::Constant(q(1, 4)), 4, &lim()).unwrap();
        assert_eq!(a.pairs[0].ratio, q(1, 1));
        assert!(a.pairs.iter().all(|p| p.measure_n == q(1, 2)));
        assert!(a.max_ratio <= q(2, 1));
        assert!(quasi_independence_audit(&OmegaSpec::Constant(q(3, 4)), 3, &lim()).is_err());
    }

    #[test]
    fn tail_sum() {
        let t = borel_cantelli_tail(1, 6, 12, &lim()).unwrap();
        for (n, m) in &t.terms {
            assert_eq!(m, &pow2(*n as i64 + 1 - (1i64 << n)));
        }
        assert!(t.total < pow2(-50));
    }
}
