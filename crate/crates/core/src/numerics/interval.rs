use std::cmp::Ordering;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use super::{format_rational, parse_rational, pow2_neg_bounds, Dyadic, ScaleExponent};
use crate::error::{Error, Result};

/// Default bound on the width of a measure enclosure, as `2^{-bits}`.
pub const DEFAULT_TOLERANCE_BITS: u64 = 40;

/// Radius of a ball.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Radius {
    /// `2^{-E}`; exact when `E` is an integer, irrational otherwise.
    Pow2(ScaleExponent),
    /// An exact positive rational.
    Rational(BigRational),
    /// An irrational radius known only through rational bounds.
    Enclosed { lo: BigRational, hi: BigRational },
}

impl Radius {
    /// Rational bounds of width at most `2^{-bits}` (or the stored enclosure).
    pub fn bounds(&self, bits: u64) -> Result<(BigRational, BigRational)> {
        match self {
            Radius::Pow2(e) => pow2_neg_bounds(e, bits),
            Radius::Rational(r) => Ok((r.clone(), r.clone())),
            Radius::Enclosed { lo, hi } => Ok((lo.clone(), hi.clone())),
        }
    }

    /// Exact value when it is rational.
    pub fn exact(&self) -> Option<BigRational> {
        match self {
            Radius::Pow2(e) if e.is_integer() => {
                let k = e.as_u64()?;
                Some(super::pow2(-(k as i64)))
            }
            Radius::Rational(r) => Some(r.clone()),
            _ => None,
        }
    }

    /// `log2(1/r)` when the radius is a power of two with rational exponent.
    pub fn scale(&self) -> Option<ScaleExponent> {
        match self {
            Radius::Pow2(e) => Some(e.clone()),
            Radius::Rational(r) => {
                let d = Dyadic::from_rational(r)?;
                (d.numerator() == &BigInt::one()).then(|| ScaleExponent::from_int(d.exponent()))
            }
            Radius::Enclosed { .. } => None,
        }
    }

    fn is_positive(&self) -> bool {
        match self {
            Radius::Pow2(_) => true,
            Radius::Rational(r) => r.is_positive(),
            Radius::Enclosed { lo, hi } => lo.is_positive() && lo <= hi,
        }
    }
}

/// A ball `(center - r, center + r)` clipped to `[0, 1]`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Interval {
    pub center: Dyadic,
    pub radius: Radius,
}

impl Interval {
    pub fn new(center: Dyadic, radius: Radius) -> Result<Self> {
        if !radius.is_positive() {
            return Err(Error::domain("interval radius must be positive"));
        }
        Ok(Interval { center, radius })
    }

    pub fn pow2(center: Dyadic, e: ScaleExponent) -> Self {
        Interval {
            center,
            radius: Radius::Pow2(e),
        }
    }
}

type Raw = (BigRational, BigRational, BigRational);

/// A segment with endpoints `l / den`, `h / den` for a shared denominator.
type Segment = (BigInt, BigInt);

/// Inner and outer clipped segments of many members over one denominator.
struct Scaled {
    den: BigInt,
    inner: Vec<Segment>,
    outer: Vec<Segment>,
}

fn raws(members: &[Interval], bits: u64) -> Result<Vec<Raw>> {
    let mut out: Vec<Raw> = Vec::with_capacity(members.len());
    let mut prev: Option<(&Radius, BigRational, BigRational)> = None;
    for iv in members {
        let (lo, hi) = match &prev {
            Some((r, lo, hi)) if *r == &iv.radius => (lo.clone(), hi.clone()),
            _ => iv.radius.bounds(bits)?,
        };
        out.push((iv.center.to_rational(), lo.clone(), hi.clone()));
        prev = Some((&iv.radius, lo, hi));
    }
    Ok(out)
}

fn common_denominator<'a>(qs: impl Iterator<Item = &'a BigRational>) -> BigInt {
    let mut den = BigInt::one();
    for q in qs {
        if !(&den % q.denom()).is_zero() {
            den = den.lcm(q.denom());
        }
    }
    den
}

fn to_int(q: &BigRational, den: &BigInt) -> BigInt {
    q.numer() * (den / q.denom())
}

fn scale_all(raw: &[Raw], den: &BigInt) -> (Vec<Segment>, Vec<Segment>) {
    let mut inner = Vec::with_capacity(raw.len());
    let mut outer = Vec::with_capacity(raw.len());
    let mut prev: Option<(&BigRational, &BigRational, BigInt, BigInt)> = None;
    for (c, lo, hi) in raw {
        let (rl, rh) = match &prev {
            Some((a, b, rl, rh)) if *a == lo && *b == hi => (rl.clone(), rh.clone()),
            _ => (to_int(lo, den), to_int(hi, den)),
        };
        let ci = to_int(c, den);
        inner.extend(clip(&ci, &rl, den));
        outer.extend(clip(&ci, &rh, den));
        prev = Some((lo, hi, rl, rh));
    }
    (merge(inner), merge(outer))
}

fn clip(c: &BigInt, r: &BigInt, den: &BigInt) -> Option<Segment> {
    let l = (c - r).max(BigInt::zero());
    let h = (c + r).min(den.clone());
    (l < h).then_some((l, h))
}

/// Exact length, or a certified enclosure when some radius is irrational.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Measure {
    Exact(BigRational),
    Enclosure { lo: BigRational, hi: BigRational },
}

impl Measure {
    pub fn lo(&self) -> &BigRational {
        match self {
            Measure::Exact(v) => v,
            Measure::Enclosure { lo, .. } => lo,
        }
    }

    pub fn hi(&self) -> &BigRational {
        match self {
            Measure::Exact(v) => v,
            Measure::Enclosure { hi, .. } => hi,
        }
    }

    pub fn exact(&self) -> Option<&BigRational> {
        match self {
            Measure::Exact(v) => Some(v),
            Measure::Enclosure { .. } => None,
        }
    }

    pub fn width(&self) -> BigRational {
        self.hi() - self.lo()
    }

    fn from_bounds(lo: BigRational, hi: BigRational) -> Self {
        if lo == hi {
            Measure::Exact(lo)
        } else {
            Measure::Enclosure { lo, hi }
        }
    }
}

/// A finite family of clipped balls, kept sorted by left endpoint.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct IntervalFamily {
    members: Vec<Interval>,
}

impl IntervalFamily {
    pub fn new(mut members: Vec<Interval>) -> Self {
        members.sort_by(|a, b| left_order(a, b));
        IntervalFamily { members }
    }

    pub fn members(&self) -> &[Interval] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn union(&self, other: &IntervalFamily) -> IntervalFamily {
        let mut m = self.members.clone();
        m.extend(other.members.iter().cloned());
        IntervalFamily::new(m)
    }

    /// Replaces each irrational `2^{-E}` radius by `2^{-ceil E}` (inner) and `2^{-floor E}` (outer).
    pub fn bracket(&self) -> (IntervalFamily, IntervalFamily) {
        let pick = |up: bool| {
            self.members
                .iter()
                .map(|iv| match &iv.radius {
                    Radius::Pow2(e) if !e.is_integer() => {
                        let k = if up { e.ceil() } else { e.floor() };
                        Interval::pow2(iv.center.clone(), ScaleExponent::from_int(k))
                    }
                    _ => iv.clone(),
                })
                .collect()
        };
        (IntervalFamily::new(pick(true)), IntervalFamily::new(pick(false)))
    }

    /// Merged disjoint segments for the inner and outer radius bounds,
    /// over a denominator shared with `others`.
    fn scaled(&self, others: &[&IntervalFamily], bits: u64) -> Result<Vec<Scaled>> {
        let mut all = vec![raws(&self.members, bits)?];
        for o in others {
            all.push(raws(&o.members, bits)?);
        }
        let den = common_denominator(all.iter().flatten().flat_map(|(c, l, h)| [c, l, h]));
        Ok(all
            .iter()
            .map(|raw| {
                let (inner, outer) = scale_all(raw, &den);
                Scaled {
                    den: den.clone(),
                    inner,
                    outer,
                }
            })
            .collect())
    }

    fn working_bits(&self, other_len: usize, tol_bits: u64) -> u64 {
        let n = (self.members.len() + other_len + 1) as u64;
        tol_bits + 64 - n.leading_zeros() as u64 + 2
    }

    pub fn exact_measure(&self) -> Result<Measure> {
        self.exact_measure_tol(DEFAULT_TOLERANCE_BITS)
    }

    /// Lebesgue measure of the union; enclosure width at most `2^{-tol_bits}`.
    pub fn exact_measure_tol(&self, tol_bits: u64) -> Result<Measure> {
        let bits = self.working_bits(0, tol_bits);
        let f = self.scaled(&[], bits)?.remove(0);
        let lo = BigRational::new(total(&f.inner), f.den.clone());
        let hi = BigRational::new(total(&f.outer), f.den);
        check_width(Measure::from_bounds(lo, hi), tol_bits)
    }

    pub fn intersect_measure(&self, other: &IntervalFamily) -> Result<Measure> {
        self.intersect_measure_tol(other, DEFAULT_TOLERANCE_BITS)
    }

    pub fn intersect_measure_tol(&self, other: &IntervalFamily, tol_bits: u64) -> Result<Measure> {
        let bits = self.working_bits(other.len(), tol_bits);
        let mut both = self.scaled(&[other], bits)?;
        let g = both.pop().expect("two families");
        let f = both.pop().expect("two families");
        let lo = BigRational::new(intersect_total(&f.inner, &g.inner), f.den.clone());
        let hi = BigRational::new(intersect_total(&f.outer, &g.outer), f.den);
        check_width(Measure::from_bounds(lo, hi), tol_bits)
    }

    /// Largest number of members sharing a common interior point (outer radii).
    pub fn max_overlap(&self) -> Result<usize> {
        let raw = raws(&self.members, DEFAULT_TOLERANCE_BITS)?;
        let den = common_denominator(raw.iter().flat_map(|(c, l, h)| [c, l, h]));
        let mut events: Vec<(BigInt, i32)> = Vec::new();
        for (c, _, hi) in &raw {
            if let Some((l, h)) = clip(&to_int(c, &den), &to_int(hi, &den), &den) {
                events.push((l, 1));
                events.push((h, -1));
            }
        }
        // Open intervals: at a shared endpoint, closings come first.
        events.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.cmp(&b.1)));
        let (mut cur, mut best) = (0i32, 0i32);
        for (_, d) in events {
            cur += d;
            best = best.max(cur);
        }
        Ok(best as usize)
    }

    pub fn to_json(&self) -> serde_json::Value {
        let intervals: Vec<IntervalJson> = self.members.iter().map(IntervalJson::from).collect();
        serde_json::json!({ "intervals": intervals })
    }

    pub fn from_json(value: &serde_json::Value) -> Result<Self> {
        #[derive(Deserialize)]
        struct Doc {
            intervals: Vec<IntervalJson>,
        }
        let doc: Doc =
            serde_json::from_value(value.clone()).map_err(|e| Error::parse(e.to_string()))?;
        let members = doc
            .intervals
            .into_iter()
            .map(Interval::try_from)
            .collect::<Result<Vec<_>>>()?;
        Ok(IntervalFamily::new(members))
    }
}

fn left_order(a: &Interval, b: &Interval) -> Ordering {
    let key = |iv: &Interval| {
        let (_, hi) = iv
            .radius
            .bounds(DEFAULT_TOLERANCE_BITS)
            .unwrap_or_else(|_| (BigRational::zero(), BigRational::zero()));
        iv.center.to_rational() - hi
    };
    match (&a.radius, &b.radius) {
        (Radius::Pow2(x), Radius::Pow2(y)) if x == y => a.center.cmp(&b.center),
        _ => key(a).cmp(&key(b)).then_with(|| a.center.cmp(&b.center)),
    }
}

fn check_width(m: Measure, tol_bits: u64) -> Result<Measure> {
    if m.width() > super::pow2(-(tol_bits as i64)) {
        return Err(Error::Precision(format!(
            "measure enclosure wider than 2^-{tol_bits}"
        )));
    }
    Ok(m)
}

fn merge(mut segs: Vec<Segment>) -> Vec<Segment> {
    segs.sort_by(|a, b| a.0.cmp(&b.0));
    let mut out: Vec<Segment> = Vec::with_capacity(segs.len());
    for (l, h) in segs {
        match out.last_mut() {
            Some(last) if l <= last.1 => {
                if h > last.1 {
                    last.1 = h;
                }
            }
            _ => out.push((l, h)),
        }
    }
    out
}

fn total(segs: &[Segment]) -> BigInt {
    segs.iter().fold(BigInt::zero(), |acc, (l, h)| acc + (h - l))
}

fn intersect_total(a: &[Segment], b: &[Segment]) -> BigInt {
    let (mut i, mut j) = (0, 0);
    let mut sum = BigInt::zero();
    while i < a.len() && j < b.len() {
        let l = (&a[i].0).max(&b[j].0);
        let h = (&a[i].1).min(&b[j].1);
        if l < h {
            sum += h - l;
        }
        if a[i].1 < b[j].1 {
            i += 1;
        } else {
            j += 1;
        }
    }
    sum
}

#[derive(Serialize, Deserialize)]
struct IntervalJson {
    center_num: String,
    center_exp: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    radius_log2: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    radius: Option<RadiusJson>,
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum RadiusJson {
    Exact(String),
    Enclosed { lo: String, hi: String },
}

impl From<&Interval> for IntervalJson {
    fn from(iv: &Interval) -> Self {
        let (radius_log2, radius) = match &iv.radius {
            Radius::Pow2(e) => (Some(e.to_string()), None),
            Radius::Rational(r) => match iv.radius.scale() {
                Some(e) => (Some(e.to_string()), None),
                None => (None, Some(RadiusJson::Exact(format_rational(r)))),
            },
            Radius::Enclosed { lo, hi } => (
                None,
                Some(RadiusJson::Enclosed {
                    lo: format_rational(lo),
                    hi: format_rational(hi),
                }),
            ),
        };
        IntervalJson {
            center_num: iv.center.numerator().to_string(),
            center_exp: iv.center.exponent(),
            radius_log2,
            radius,
        }
    }
}

impl TryFrom<IntervalJson> for Interval {
    type Error = Error;

    fn try_from(j: IntervalJson) -> Result<Self> {
        let num: BigInt = j
            .center_num
            .parse()
            .map_err(|_| Error::parse(format!("bad center_num {:?}", j.center_num)))?;
        let center = Dyadic::new(num, j.center_exp);
        let radius = match (j.radius_log2, j.radius) {
            (Some(e), None) => Radius::Pow2(ScaleExponent::parse(&e)?),
            (None, Some(RadiusJson::Exact(r))) => Radius::Rational(parse_rational(&r)?),
            (None, Some(RadiusJson::Enclosed { lo, hi })) => Radius::Enclosed {
                lo: parse_rational(&lo)?,
                hi: parse_rational(&hi)?,
            },
            _ => {
                return Err(Error::parse(
                    "each interval needs exactly one of radius_log2 or radius",
                ))
            }
        };
        Interval::new(center, radius)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(p: i64, d: i64) -> BigRational {
        BigRational::new(p.into(), d.into())
    }

    fn grid(n: u64, e: &str) -> IntervalFamily {
        let e = ScaleExponent::parse(e).unwrap();
        IntervalFamily::new(
            (0..=(1u64 << n))
                .map(|k| Interval::pow2(Dyadic::new(k, n), e.clone()))
                .collect(),
        )
    }

    #[test]
    fn unit_interval_has_measure_one() {
        let f = IntervalFamily::new(vec![Interval::pow2(Dyadic::new(1, 1), ScaleExponent::from_int(1))]);
        assert_eq!(f.exact_measure().unwrap(), Measure::Exact(q(1, 1)));
    }

    #[test]
    fn grid_families() {
        assert_eq!(grid(2, "4").exact_measure().unwrap(), Measure::Exact(q(1, 2)));
        assert_eq!(grid(3, "8").exact_measure().unwrap(), Measure::Exact(q(1, 16)));
        let u1 = grid(1, "3");
        let u2 = grid(2, "4");
        assert_eq!(u1.intersect_measure(&u2).unwrap(), Measure::Exact(q(1, 4)));
        assert_eq!(u2.intersect_measure(&u2).unwrap(), u2.exact_measure().unwrap());
    }

    #[test]
    fn irrational_radii_give_tight_enclosures() {
        let f = grid(2, "16/3");
        let m = f.exact_measure().unwrap();
        assert!(m.exact().is_none());
        assert!(m.width() <= crate::numerics::pow2(-40));
        let (inner, outer) = f.bracket();
        let (i, o) = (inner.exact_measure().unwrap(), outer.exact_measure().unwrap());
        assert!(i.lo() <= m.lo() && m.hi() <= o.hi());
    }

    #[test]
    fn json_round_trip() {
        let f = IntervalFamily::new(vec![
            Interval::pow2(Dyadic::new(3, 3), ScaleExponent::parse("16/3").unwrap()),
            Interval::new(Dyadic::new(1, 1), Radius::Rational(q(1, 12))).unwrap(),
        ]);
        let back = IntervalFamily::from_json(&f.to_json()).unwrap();
        assert_eq!(back, f);
    }

    #[test]
    fn overlap_count() {
        assert_eq!(grid(2, "4").max_overlap().unwrap(), 1);
        assert_eq!(grid(2, "1").max_overlap().unwrap(), 4);
    }
}
