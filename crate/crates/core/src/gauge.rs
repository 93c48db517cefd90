//! Gauge functions in scale space, covering sums, series certificates for
//! the convergence/divergence dichotomies, and box counting.

use std::fmt;

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::limsup::PhiSpec;
use crate::numerics::ball::{self, certify, Real};
use crate::numerics::{format_rational, ldexp, parse_rational, IntervalFamily, Radius, ScaleExponent};

/// Significant digits of a logarithmic gauge value.
pub const GAUGE_DIGITS: u32 = 15;

const WP: u64 = 128;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum GaugeSpec {
    /// `h(r) = r^s`.
    Power(BigRational),
    /// `h(r) = 1 / (log(1/r))^s`.
    LogPower(BigRational),
}

impl GaugeSpec {
    pub fn power(s: BigRational) -> Result<Self> {
        positive(&s)?;
        Ok(GaugeSpec::Power(s))
    }

    pub fn log_power(s: BigRational) -> Result<Self> {
        positive(&s)?;
        Ok(GaugeSpec::LogPower(s))
    }

    pub fn exponent(&self) -> &BigRational {
        match self {
            GaugeSpec::Power(s) | GaugeSpec::LogPower(s) => s,
        }
    }

    fn with_exponent(&self, s: BigRational) -> GaugeSpec {
        match self {
            GaugeSpec::Power(_) => GaugeSpec::Power(s),
            GaugeSpec::LogPower(_) => GaugeSpec::LogPower(s),
        }
    }

    /// Whether `h(x)/x` is non-increasing near 0.
    pub fn ratio_non_increasing(&self) -> bool {
        match self {
            GaugeSpec::Power(s) => s <= &BigRational::one(),
            GaugeSpec::LogPower(_) => true,
        }
    }
}

fn positive(s: &BigRational) -> Result<()> {
    if s.is_positive() {
        Ok(())
    } else {
        Err(Error::domain(format!("gauge exponent {} must be positive", format_rational(s))))
    }
}

impl std::str::FromStr for GaugeSpec {
    type Err = Error;

    /// `power:<s>` or `log:<s>`.
    fn from_str(text: &str) -> Result<Self> {
        let (kind, s) = text
            .split_once(':')
            .ok_or_else(|| Error::parse(format!("gauge must be power:<s> or log:<s>, got {text:?}")))?;
        let s = parse_rational(s)?;
        match kind.trim() {
            "power" => GaugeSpec::power(s),
            "log" | "logpower" => GaugeSpec::log_power(s),
            other => Err(Error::parse(format!("unknown gauge {other:?}"))),
        }
    }
}

impl fmt::Display for GaugeSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GaugeSpec::Power(s) => write!(f, "power:{}", format_rational(s)),
            GaugeSpec::LogPower(s) => write!(f, "log:{}", format_rational(s)),
        }
    }
}

/// `h(2^{-E})`: an exact exponent for power gauges, a certified value otherwise.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum GaugeValue {
    Scale(ScaleExponent),
    Value(Real),
}

impl GaugeValue {
    pub fn to_f64(&self) -> f64 {
        match self {
            GaugeValue::Scale(e) => pow2_neg_f64(e.value()),
            GaugeValue::Value(v) => v.to_f64(),
        }
    }
}

fn pow2_neg_f64(e: &BigRational) -> f64 {
    let fl = e.floor();
    let frac = (e - &fl).to_f64().unwrap_or(0.0);
    ldexp(2f64.powf(-frac), -fl.to_integer().to_i64().unwrap_or(i64::MAX / 2))
}

/// `(L)^{-s}` for a positive ball `L`.
fn inv_power(l: &Real, s: &BigRational, prec: u64) -> Result<Real> {
    let sr = Real::from_rational(s, prec + 16);
    ball::exp(&ball::ln(l, prec + 16)?.mul(&sr, prec + 16).neg(), prec)
}

/// `2^{-x}` for a non-negative rational `x` of any size representable in `i64`.
fn pow2_neg_real(x: &BigRational, prec: u64) -> Result<Real> {
    let fl = x.floor();
    let k = fl
        .to_integer()
        .to_i64()
        .ok_or_else(|| Error::Precision("gauge exponent too large".into()))?;
    let frac = Real::from_rational(&(x - &fl), prec + 16);
    let v = ball::exp(&frac.mul(&ball::ln2(prec + 16), prec + 16).neg(), prec)?;
    Ok(v.mul_pow2(-k))
}

fn log_power_at_scale(e: &ScaleExponent, s: &BigRational, prec: u64) -> Result<Real> {
    if e.value().is_zero() {
        return Err(Error::domain("logarithmic gauge is infinite at radius 1"));
    }
    let guard = e.value().numer().bits() + 16;
    let l = Real::from_rational(e.value(), prec + guard).mul(&ball::ln2(prec + guard), prec + 16);
    inv_power(&l, s, prec)
}

/// `h(2^{-E})`.
pub fn gauge_eval_scale(h: &GaugeSpec, e: &ScaleExponent) -> Result<GaugeValue> {
    match h {
        GaugeSpec::Power(s) => Ok(GaugeValue::Scale(e.scaled(s)?)),
        GaugeSpec::LogPower(s) => {
            let v = certify(GAUGE_DIGITS, |prec| log_power_at_scale(e, s, prec), |v| vec![v])?;
            Ok(GaugeValue::Value(v))
        }
    }
}

/// Enclosure of `h(r)` for any radius representation.
pub fn gauge_eval(h: &GaugeSpec, r: &Radius, prec: u64) -> Result<Real> {
    if let Some(e) = r.scale() {
        return match h {
            GaugeSpec::Power(s) => pow2_neg_real(&(e.value() * s), prec),
            GaugeSpec::LogPower(s) => log_power_at_scale(&e, s, prec),
        };
    }
    let at = |q: &BigRational| -> Result<Real> {
        if !q.is_positive() {
            return Err(Error::domain("gauge evaluated at a non-positive radius"));
        }
        let lnr = ball::ln(&Real::from_rational(q, prec + 32), prec + 32)?;
        match h {
            GaugeSpec::Power(s) => ball::exp(&lnr.mul(&Real::from_rational(s, prec + 32), prec + 32), prec),
            GaugeSpec::LogPower(s) => {
                if q >= &BigRational::one() {
                    return Err(Error::domain("logarithmic gauge is infinite at radius >= 1"));
                }
                inv_power(&lnr.neg(), s, prec)
            }
        }
    };
    match r {
        Radius::Rational(q) => at(q),
        Radius::Enclosed { lo, hi } => {
            let a = at(lo)?;
            let b = at(hi)?;
            Ok(Real::from_bounds(&a.lower(), &b.upper(), prec))
        }
        Radius::Pow2(_) => unreachable!("power-of-two radii carry a scale"),
    }
}

/// `sum_i h(r_i)` over the members of a family.
pub fn covering_sum(f: &IntervalFamily, h: &GaugeSpec) -> Result<Real> {
    let mut total = Real::from_int(0);
    let mut last: Option<(&Radius, Real)> = None;
    for iv in f.members() {
        let v = match &last {
            Some((r, v)) if *r == &iv.radius => v.clone(),
            _ => gauge_eval(h, &iv.radius, WP)?,
        };
        total = total.add(&v, WP);
        last = Some((&iv.radius, v));
    }
    Ok(total)
}

// ---------------------------------------------------------------------------
// Series

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Convergence {
    Converges,
    Diverges,
    Inconclusive,
}

impl fmt::Display for Convergence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Convergence::Converges => "converges",
            Convergence::Diverges => "diverges",
            Convergence::Inconclusive => "inconclusive",
        })
    }
}

/// The closed-form reason behind a verdict.
#[derive(Clone, Debug, PartialEq)]
pub enum Certificate {
    /// Every term equals `value`.
    ConstantTerm { value: Real },
    /// Terms are `C 2^{rho n}` exactly.
    Geometric { log2_ratio: BigRational },
    /// Consecutive term ratios are at most 1/2 from index `from` on.
    SuperGeometric { from: u64 },
    /// Terms divided by `2^{rho n}` tend to a positive finite limit.
    GeometricComparison { log2_ratio: BigRational },
    /// Terms are `q^{-p}` up to a constant factor.
    PSeries { exponent: BigRational },
    /// Terms divided by `q^{-p}` tend to a positive finite limit.
    PSeriesComparison { exponent: BigRational },
    /// Terms are `q^{-a} (ln q)^{-b}` up to a constant factor.
    Bertrand { a: BigRational, b: BigRational },
    /// Terms are eventually below `q^{-2}`.
    DominatedBySquares,
    /// Terms tend to infinity.
    UnboundedTerms,
    None,
}

impl fmt::Display for Certificate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let r = format_rational;
        match self {
            Certificate::ConstantTerm { value } => write!(f, "constant term {}", value.to_decimal(GAUGE_DIGITS)),
            Certificate::Geometric { log2_ratio } => write!(f, "geometric, ratio 2^({})", r(log2_ratio)),
            Certificate::SuperGeometric { from } => write!(f, "super-geometric, ratios <= 1/2 from n = {from}"),
            Certificate::GeometricComparison { log2_ratio } => {
                write!(f, "limit comparison with geometric ratio 2^({})", r(log2_ratio))
            }
            Certificate::PSeries { exponent } => write!(f, "p-series, p = {}", r(exponent)),
            Certificate::PSeriesComparison { exponent } => write!(f, "limit comparison with p-series, p = {}", r(exponent)),
            Certificate::Bertrand { a, b } => write!(f, "Bertrand series, a = {}, b = {}", r(a), r(b)),
            Certificate::DominatedBySquares => write!(f, "eventually below q^-2"),
            Certificate::UnboundedTerms => write!(f, "terms unbounded"),
            Certificate::None => write!(f, "none"),
        }
    }
}

impl Certificate {
    /// `rho` with terms comparable to `2^{rho n}`, when geometric.
    pub fn log2_ratio(&self) -> Option<BigRational> {
        match self {
            Certificate::ConstantTerm { .. } => Some(BigRational::zero()),
            Certificate::Geometric { log2_ratio } | Certificate::GeometricComparison { log2_ratio } => {
                Some(log2_ratio.clone())
            }
            _ => None,
        }
    }

    /// Polynomial decay exponent `p` with terms comparable to `q^{-p}` (up to logs at `p = 1`).
    pub fn decay_exponent(&self) -> Option<BigRational> {
        match self {
            Certificate::PSeries { exponent } | Certificate::PSeriesComparison { exponent } => Some(exponent.clone()),
            Certificate::Bertrand { a, .. } => Some(a.clone()),
            _ => None,
        }
    }

    fn verdict(&self) -> Convergence {
        let one = BigRational::one();
        match self {
            Certificate::ConstantTerm { .. } | Certificate::UnboundedTerms => Convergence::Diverges,
            Certificate::Geometric { log2_ratio } | Certificate::GeometricComparison { log2_ratio } => {
                if log2_ratio.is_negative() {
                    Convergence::Converges
                } else {
                    Convergence::Diverges
                }
            }
            Certificate::SuperGeometric { .. } | Certificate::DominatedBySquares => Convergence::Converges,
            Certificate::PSeries { exponent } | Certificate::PSeriesComparison { exponent } => {
                if exponent > &one {
                    Convergence::Converges
                } else {
                    Convergence::Diverges
                }
            }
            Certificate::Bertrand { a, b } => {
                if a > &one || (a == &one && b > &one) {
                    Convergence::Converges
                } else {
                    Convergence::Diverges
                }
            }
            Certificate::None => Convergence::Inconclusive,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SeriesTerm {
    pub n: u64,
    /// `log2` of the term, exact when rational.
    pub log2_exact: Option<BigRational>,
    pub log2_term: f64,
    pub term: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct HypothesisCheck {
    pub name: &'static str,
    pub holds: bool,
    pub detail: String,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SeriesVerdict {
    pub verdict: Convergence,
    pub certificate: Certificate,
    /// Upper bound on the terms beyond the horizon, when the certificate yields one.
    pub tail_bound: Option<f64>,
    pub trace: Vec<SeriesTerm>,
    pub partial_sum: f64,
    pub hypotheses: Vec<HypothesisCheck>,
}

impl SeriesVerdict {
    /// True when every hypothesis needed to read the verdict through the transference side holds.
    pub fn hypotheses_hold(&self) -> bool {
        self.hypotheses.iter().all(|h| h.holds)
    }
}

/// `log2` of a term as an exact rational or a ball.
#[derive(Clone, Debug)]
struct Log2 {
    exact: Option<BigRational>,
    ball: Real,
}

impl Log2 {
    fn exact(q: BigRational) -> Self {
        Log2 {
            ball: Real::from_rational(&q, WP),
            exact: Some(q),
        }
    }

    fn ball(b: Real) -> Self {
        Log2 { exact: None, ball: b }
    }

    fn to_term(&self, n: u64) -> SeriesTerm {
        let l = self
            .exact
            .as_ref()
            .map(|q| q.to_f64().unwrap_or(f64::NEG_INFINITY))
            .unwrap_or_else(|| self.ball.to_f64());
        let term = if l.is_finite() {
            let fl = l.floor();
            ldexp(2f64.powf(l - fl), fl as i64)
        } else {
            0.0
        };
        SeriesTerm {
            n,
            log2_exact: self.exact.clone(),
            log2_term: l,
            term,
        }
    }
}

fn ln2_ball() -> Real {
    ball::ln2(WP)
}

/// `log2 x` for a positive ball.
fn log2_ball(x: &Real) -> Result<Real> {
    ball::ln(x, WP)?.div(&ln2_ball(), WP)
}

/// `log2 h(2^{-E})` for `E` given as `log2(1/r)`.
fn log2_gauge(h: &GaugeSpec, e: &Log2) -> Result<Log2> {
    match h {
        GaugeSpec::Power(s) => Ok(match &e.exact {
            Some(q) => Log2::exact(-(q * s)),
            None => Log2::ball(e.ball.mul(&Real::from_rational(s, WP), WP).neg()),
        }),
        GaugeSpec::LogPower(s) => {
            if !e.ball.is_positive() {
                return Err(Error::domain("logarithmic gauge is infinite at radius >= 1"));
            }
            let l = log2_ball(&e.ball.mul(&ln2_ball(), WP))?;
            Ok(Log2::ball(l.mul(&Real::from_rational(s, WP), WP).neg()))
        }
    }
}

fn add_int(l: &Log2, n: i64) -> Log2 {
    match &l.exact {
        Some(q) => Log2::exact(q + BigRational::from_integer(n.into())),
        None => Log2::ball(l.ball.add(&Real::from_int(n), WP)),
    }
}

fn rat(n: i64, d: i64) -> BigRational {
    BigRational::new(n.into(), d.into())
}

/// Terms of `sum_{n >= 1} 2^n h(phi(n) / 2^n)`.
fn phi_term(phi: &PhiSpec, h: &GaugeSpec, n: u64) -> Result<Log2> {
    let e = match phi.log2_phi(n) {
        Some(q) => Log2::exact(BigRational::from_integer(n.into()) - q),
        None => Log2::ball(Real::from_int(n).sub(&phi.log2_phi_ball(n, WP)?, WP)),
    };
    Ok(add_int(&log2_gauge(h, &e)?, n as i64))
}

fn phi_certificate(phi: &PhiSpec, h: &GaugeSpec) -> Result<Certificate> {
    let one = BigRational::one();
    Ok(match (phi, h) {
        (PhiSpec::Constant(_), GaugeSpec::Power(s)) => Certificate::Geometric { log2_ratio: &one - s },
        (PhiSpec::PowerDecay(a), GaugeSpec::Power(s)) => Certificate::Geometric {
            log2_ratio: &one - s * (&one + a),
        },
        (PhiSpec::DoubleExp(k), GaugeSpec::Power(s)) => {
            // log2 ratio 1 - s 2^n / k is at most -1 once s 2^n >= 2k.
            let mut n = 0u64;
            while s * BigRational::from_integer(BigInt::one() << n as usize) < BigRational::from_integer((2 * k).into()) {
                n += 1;
            }
            Certificate::SuperGeometric { from: n }
        }
        (PhiSpec::TowerDecay(a), GaugeSpec::Power(s)) => {
            // log2 ratio (1 - s) - s 2^{n a} (2^a - 1), made <= -1 with a unit margin.
            let (sf, af) = (s.to_f64().unwrap_or(0.0), a.to_f64().unwrap_or(0.0));
            let mut n = 0u64;
            while sf * 2f64.powf(n as f64 * af) * (2f64.powf(af) - 1.0) < 3.0 - sf {
                n += 1;
            }
            Certificate::SuperGeometric { from: n }
        }
        (PhiSpec::Constant(_) | PhiSpec::PowerDecay(_), GaugeSpec::LogPower(_)) => Certificate::UnboundedTerms,
        (PhiSpec::DoubleExp(k), GaugeSpec::LogPower(s)) => {
            if s == &one {
                let value = Real::from_int(*k).div(&ln2_ball(), WP)?;
                Certificate::ConstantTerm { value }
            } else {
                Certificate::Geometric { log2_ratio: &one - s }
            }
        }
        (PhiSpec::TowerDecay(a), GaugeSpec::LogPower(s)) => Certificate::GeometricComparison {
            log2_ratio: &one - s * a,
        },
    })
}

fn tail_from_certificate(cert: &Certificate, next: &SeriesTerm) -> Option<f64> {
    let bound = match cert {
        Certificate::Geometric { log2_ratio } if log2_ratio.is_negative() => {
            next.term / (1.0 - 2f64.powf(log2_ratio.to_f64()?))
        }
        Certificate::SuperGeometric { from } if next.n >= *from => 2.0 * next.term,
        _ => return None,
    };
    // Outward margin for the floating evaluation of the next term.
    Some(bound * (1.0 + 1e-12))
}

/// Classifies `sum_n 2^n h(phi(n)/2^n)`, with a trace of terms `1..=horizon`.
pub fn series_classify(phi: &PhiSpec, h: &GaugeSpec, horizon: u64) -> Result<SeriesVerdict> {
    let certificate = phi_certificate(phi, h)?;
    let verdict = certificate.verdict();
    let mut trace = Vec::new();
    for n in 1..=horizon {
        trace.push(phi_term(phi, h, n)?.to_term(n));
    }
    let next = phi_term(phi, h, horizon + 1)?.to_term(horizon + 1);
    let tail_bound = tail_from_certificate(&certificate, &next);
    let partial_sum = trace.iter().map(|t| t.term).sum();
    let bounded = match &certificate {
        Certificate::UnboundedTerms => false,
        c => c.log2_ratio().is_none_or(|r| !r.is_positive()),
    };
    let hypotheses = vec![
        HypothesisCheck {
            name: "sup phi finite",
            holds: true,
            detail: format!("{phi} is bounded"),
        },
        HypothesisCheck {
            name: "sup 2^n h(phi(n)/2^n) finite",
            holds: bounded,
            detail: certificate.to_string(),
        },
        HypothesisCheck {
            name: "h(x)/x non-increasing",
            holds: h.ratio_non_increasing(),
            detail: h.to_string(),
        },
    ];
    Ok(SeriesVerdict {
        verdict,
        certificate,
        tail_bound,
        trace,
        partial_sum,
        hypotheses,
    })
}

/// Threshold exponent of a one-parameter gauge family.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum CriticalExponent {
    /// Converges for every `s > 0`.
    Zero,
    /// Diverges exactly for `s <= value`.
    Value(BigRational),
    /// Diverges for every `s`.
    Infinite,
}

impl fmt::Display for CriticalExponent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CriticalExponent::Zero => write!(f, "0"),
            CriticalExponent::Value(v) => write!(f, "{}", format_rational(v)),
            CriticalExponent::Infinite => write!(f, "inf"),
        }
    }
}

/// Root of an affine function of `s` known at `s = 1` and `s = 2`.
fn affine_root(at1: &BigRational, at2: &BigRational, target: &BigRational) -> Option<BigRational> {
    let slope = at2 - at1;
    if slope.is_zero() {
        return None;
    }
    Some(BigRational::one() + (target - at1) / slope)
}

fn critical_from(c1: &Certificate, c2: &Certificate) -> CriticalExponent {
    match (c1, c2) {
        (Certificate::UnboundedTerms, _) => CriticalExponent::Infinite,
        (Certificate::SuperGeometric { .. } | Certificate::DominatedBySquares, _) => CriticalExponent::Zero,
        _ => {
            let root = if let (Some(a), Some(b)) = (c1.log2_ratio(), c2.log2_ratio()) {
                affine_root(&a, &b, &BigRational::zero())
            } else if let (Some(a), Some(b)) = (c1.decay_exponent(), c2.decay_exponent()) {
                affine_root(&a, &b, &BigRational::one())
            } else {
                None
            };
            match root {
                Some(r) if r.is_positive() => CriticalExponent::Value(r),
                Some(_) => CriticalExponent::Zero,
                None => CriticalExponent::Infinite,
            }
        }
    }
}

/// Supremum of the exponents `s` for which `sum 2^n h_s(phi(n)/2^n)` diverges.
pub fn critical_exponent(phi: &PhiSpec, family: &GaugeSpec) -> Result<CriticalExponent> {
    let c1 = phi_certificate(phi, &family.with_exponent(BigRational::one()))?;
    let c2 = phi_certificate(phi, &family.with_exponent(rat(2, 1)))?;
    Ok(critical_from(&c1, &c2))
}

/// Approximation functions for the Khintchine and Jarník series.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum PsiSpec {
    /// `q^{-alpha}`.
    PowerDecay(BigRational),
    /// `1 / (q ln q)`.
    LogReciprocal,
    /// `2^{-q^alpha}`.
    SuperLiouville(BigRational),
}

impl std::str::FromStr for PsiSpec {
    type Err = Error;

    /// `power:<alpha>`, `logrecip`, or `liouville:<alpha>`.
    fn from_str(text: &str) -> Result<Self> {
        let (kind, arg) = text.split_once(':').unwrap_or((text, ""));
        let alpha = || -> Result<BigRational> {
            let a = parse_rational(arg)?;
            positive(&a)?;
            Ok(a)
        };
        match kind.trim() {
            "power" => Ok(PsiSpec::PowerDecay(alpha()?)),
            "logrecip" => Ok(PsiSpec::LogReciprocal),
            "liouville" => Ok(PsiSpec::SuperLiouville(alpha()?)),
            other => Err(Error::parse(format!("unknown approximation function {other:?}"))),
        }
    }
}

impl fmt::Display for PsiSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PsiSpec::PowerDecay(a) => write!(f, "power:{}", format_rational(a)),
            PsiSpec::LogReciprocal => write!(f, "logrecip"),
            PsiSpec::SuperLiouville(a) => write!(f, "liouville:{}", format_rational(a)),
        }
    }
}

fn ln_q(q: u64) -> Real {
    ball::ln(&Real::from_int(q), WP).expect("q >= 2")
}

impl PsiSpec {
    fn log2_psi(&self, q: u64) -> Result<Log2> {
        let lq = log2_ball(&Real::from_int(q))?;
        Ok(match self {
            PsiSpec::PowerDecay(a) => Log2::ball(lq.mul(&Real::from_rational(a, WP), WP).neg()),
            PsiSpec::LogReciprocal => Log2::ball(lq.add(&log2_ball(&ln_q(q))?, WP).neg()),
            PsiSpec::SuperLiouville(a) => {
                let qa = ball::exp(&ln_q(q).mul(&Real::from_rational(a, WP), WP), WP)?;
                Log2::ball(qa.neg())
            }
        })
    }
}

/// Classifies `sum_{q >= 2} psi(q)`.
pub fn khintchine_series(psi: &PsiSpec, horizon: u64) -> Result<SeriesVerdict> {
    let certificate = match psi {
        PsiSpec::PowerDecay(a) => Certificate::PSeries { exponent: a.clone() },
        PsiSpec::LogReciprocal => Certificate::Bertrand {
            a: BigRational::one(),
            b: BigRational::one(),
        },
        PsiSpec::SuperLiouville(_) => Certificate::DominatedBySquares,
    };
    let mut trace = Vec::new();
    for q in 2..=horizon.max(2) {
        trace.push(psi.log2_psi(q)?.to_term(q));
    }
    let tail_bound = match &certificate {
        // sum_{q > H} q^{-p} <= H^{1-p} / (p - 1)
        Certificate::PSeries { exponent } if exponent > &BigRational::one() => {
            let p = exponent.to_f64().unwrap_or(f64::INFINITY);
            Some((horizon.max(2) as f64).powf(1.0 - p) / (p - 1.0) * (1.0 + 1e-12))
        }
        _ => None,
    };
    let hypotheses = vec![HypothesisCheck {
        name: "psi monotonic",
        holds: true,
        detail: format!("{psi} is decreasing for q >= 2"),
    }];
    Ok(SeriesVerdict {
        verdict: certificate.verdict(),
        partial_sum: trace.iter().map(|t| t.term).sum(),
        certificate,
        tail_bound,
        trace,
        hypotheses,
    })
}

fn jarnik_certificate(psi: &PsiSpec, h: &GaugeSpec) -> Certificate {
    let one = BigRational::one();
    match (psi, h) {
        (PsiSpec::PowerDecay(a), GaugeSpec::Power(s)) => Certificate::PSeries {
            exponent: s * (&one + a) - &one,
        },
        (PsiSpec::LogReciprocal, GaugeSpec::Power(s)) => Certificate::Bertrand {
            a: s * rat(2, 1) - &one,
            b: s.clone(),
        },
        (PsiSpec::SuperLiouville(_), GaugeSpec::Power(_)) => Certificate::DominatedBySquares,
        (PsiSpec::SuperLiouville(a), GaugeSpec::LogPower(s)) => Certificate::PSeriesComparison {
            exponent: a * s - &one,
        },
        (PsiSpec::PowerDecay(_) | PsiSpec::LogReciprocal, GaugeSpec::LogPower(_)) => Certificate::UnboundedTerms,
    }
}

/// Classifies `sum_{q >= 2} q h(psi(q)/q)`.
pub fn jarnik_series(psi: &PsiSpec, h: &GaugeSpec, horizon: u64) -> Result<SeriesVerdict> {
    let certificate = jarnik_certificate(psi, h);
    let mut trace = Vec::new();
    for q in 2..=horizon.max(2) {
        let lq = log2_ball(&Real::from_int(q))?;
        let lr = psi.log2_psi(q)?.ball.sub(&lq, WP);
        let e = Log2::ball(lr.neg());
        let lh = log2_gauge(h, &e)?;
        trace.push(Log2::ball(lh.ball.add(&lq, WP)).to_term(q));
    }
    let hypotheses = vec![
        HypothesisCheck {
            name: "psi monotonic",
            holds: true,
            detail: format!("{psi} is decreasing for q >= 2"),
        },
        HypothesisCheck {
            name: "h(x)/x non-increasing",
            holds: h.ratio_non_increasing(),
            detail: h.to_string(),
        },
    ];
    Ok(SeriesVerdict {
        verdict: certificate.verdict(),
        partial_sum: trace.iter().map(|t| t.term).sum(),
        certificate,
        tail_bound: None,
        trace,
        hypotheses,
    })
}

/// Supremum of the `s` for which the Jarník series diverges.
pub fn jarnik_critical_exponent(psi: &PsiSpec, family: &GaugeSpec) -> CriticalExponent {
    let c1 = jarnik_certificate(psi, &family.with_exponent(BigRational::one()));
    let c2 = jarnik_certificate(psi, &family.with_exponent(rat(2, 1)));
    critical_from(&c1, &c2)
}

// ---------------------------------------------------------------------------
// Box counting

/// Number of boxes `[j 2^-m, (j+1) 2^-m]` meeting the union of `f` (members clipped to `[0,1]`).
///
/// A box meets an open member `(c - r, c + r)` when `j 2^-m < c + r` and `(j+1) 2^-m > c - r`.
pub fn box_count(f: &IntervalFamily, m: u64, cap: u64) -> Result<BigUint> {
    if m > cap {
        return Err(Error::ExponentCap {
            exponent: m.to_string(),
            cap,
        });
    }
    let top: BigInt = (BigInt::one() << m as usize) - 1;
    let scale = BigRational::from_integer(BigInt::one() << m as usize);
    let mut ranges: Vec<(BigInt, BigInt)> = Vec::with_capacity(f.len());
    for iv in f.members() {
        let c = iv.center.to_rational();
        let mut bits = m + 64;
        let (lo_j, hi_j): (BigInt, BigInt) = loop {
            let (rl, rh) = iv.radius.bounds(bits)?;
            let a_lo = ((&c - &rh) * &scale).floor().to_integer();
            let a_hi = ((&c - &rl) * &scale).floor().to_integer();
            let b_lo = ((&c + &rl) * &scale).ceil().to_integer();
            let b_hi = ((&c + &rh) * &scale).ceil().to_integer();
            if a_lo == a_hi && b_lo == b_hi {
                break (a_lo, b_lo - 1);
            }
            if bits > 4 * (m + 64) {
                return Err(Error::Precision("box boundary too close to an interval endpoint".into()));
            }
            bits *= 2;
        };
        let lo_j = lo_j.max(BigInt::zero());
        let hi_j = hi_j.min(top.clone());
        if lo_j <= hi_j {
            ranges.push((lo_j, hi_j));
        }
    }
    ranges.sort();
    let mut count = BigInt::zero();
    let mut cur: Option<(BigInt, BigInt)> = None;
    for (l, h) in ranges {
        cur = match cur {
            Some((cl, ch)) if l <= &ch + 1 => Some((cl, ch.max(h))),
            Some((cl, ch)) => {
                count += ch - cl + 1;
                Some((l, h))
            }
            None => Some((l, h)),
        };
    }
    if let Some((cl, ch)) = cur {
        count += ch - cl + 1;
    }
    Ok(count.to_biguint().expect("non-negative count"))
}

/// `log2` of the box count at scale `m` for the grid family `{k/2^n}` with radius `2^{-e}`, `e > n`.
pub fn grid_box_count_log2(n: u64, e: u64, m: u64) -> Result<u64> {
    if e <= n {
        return Err(Error::domain("grid count needs non-overlapping members (e > n)"));
    }
    Ok(m.min(n + 1 + m.saturating_sub(e)))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FitMode {
    /// `log2 N` against `m`.
    Ordinary,
    /// `log2 N` against `log2 m`.
    Logarithmic,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoxSample {
    pub m: u64,
    pub log2_count: f64,
}

impl BoxSample {
    pub fn new(m: u64, count: &BigUint) -> Self {
        BoxSample {
            m,
            log2_count: log2_biguint(count),
        }
    }
}

fn log2_biguint(v: &BigUint) -> f64 {
    crate::numerics::log2_rational(&BigRational::from_integer(BigInt::from(v.clone())))
}

#[derive(Clone, Debug, PartialEq)]
pub struct DimFit {
    pub slope: f64,
    pub intercept: f64,
    /// Largest absolute residual.
    pub residual: f64,
    pub samples: Vec<BoxSample>,
}

/// Least-squares slope of `log2 N` against the scale coordinate.
pub fn dim_fit(samples: &[BoxSample], mode: FitMode) -> Result<DimFit> {
    if samples.len() < 2 {
        return Err(Error::Fit("a fit needs at least two samples".into()));
    }
    let xs: Vec<f64> = samples
        .iter()
        .map(|s| match mode {
            FitMode::Ordinary => s.m as f64,
            FitMode::Logarithmic => (s.m as f64).log2(),
        })
        .collect();
    if mode == FitMode::Logarithmic && samples.iter().any(|s| s.m == 0) {
        return Err(Error::Fit("logarithmic fit needs m >= 1".into()));
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = samples.iter().map(|s| s.log2_count).sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    if sxx == 0.0 {
        return Err(Error::Fit("all samples share one scale".into()));
    }
    let sxy: f64 = xs.iter().zip(samples).map(|(x, s)| (x - mx) * (s.log2_count - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let residual = xs
        .iter()
        .zip(samples)
        .map(|(x, s)| (s.log2_count - (intercept + slope * x)).abs())
        .fold(0.0, f64::max);
    Ok(DimFit {
        slope,
        intercept,
        residual,
        samples: samples.to_vec(),
    })
}

/// `log2 N / m`, exact when `N` is a power of two.
pub fn single_scale_ratio(count: &BigUint, m: u64) -> (f64, Option<BigRational>) {
    let approx = log2_biguint(count) / m as f64;
    let exact = (count.count_ones() == 1).then(|| {
        let bits = count.bits() - 1;
        BigRational::new(BigInt::from(bits), BigInt::from(m))
    });
    (approx, exact)
}

/// `log2 N / log2 m`.
pub fn logarithmic_ratio(log2_count: f64, m: u64) -> f64 {
    log2_count / (m as f64).log2()
}
