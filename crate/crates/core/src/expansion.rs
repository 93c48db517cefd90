//! Rule-defined binary expansions and their run-length structure.

use std::fmt;

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::numerics::{format_rational, parse_rational, pow2, Dyadic};

/// A scheduled run: digit `digit` on positions `start+1 ..= start+length`.
///
/// Runs are framed: position `start` (when at least 1) and position
/// `start+length+1` carry the opposite digit, so the run is maximal in the
/// realized stream.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Run {
    pub start: u64,
    pub length: BigUint,
    pub digit: u8,
}

impl Run {
    fn end(&self) -> BigUint {
        BigUint::from(self.start) + &self.length
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum RunSource {
    /// A finite list of runs.
    Explicit(Vec<Run>),
    /// `L_i = ceil(2^{n_i} / k)`, next start `max(ratio n_i, n_i + L_i + 1)`.
    Geometric { n1: u64, ratio: u64, k: u64, digit: u8 },
    /// `L_i = ceil(a n_i)`, next start `max(ratio n_i, n_i + L_i + 1)`.
    Linear { n1: u64, ratio: u64, a: BigRational, digit: u8 },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Schedule {
    /// Digit at an unscheduled position `p` is `filler[(p - 1) mod len]`.
    pub filler: Vec<u8>,
    pub runs: RunSource,
    /// Number of leading digits dropped (the doubling map applied this often).
    pub offset: u64,
}

/// A finite description of a binary expansion `0.e_1 e_2 ...`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum DigitProgram {
    /// Terminating expansion of a dyadic rational.
    Finite(Vec<u8>),
    EventuallyPeriodic { prefix: Vec<u8>, period: Vec<u8> },
    RunSchedule(Schedule),
}

/// `z_n`: a length, or unbounded for a constant infinite tail.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum RunLength {
    Finite(BigUint),
    Unbounded,
}

impl RunLength {
    pub fn finite(&self) -> Option<&BigUint> {
        match self {
            RunLength::Finite(z) => Some(z),
            RunLength::Unbounded => None,
        }
    }
}

impl fmt::Display for RunLength {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RunLength::Finite(z) => write!(f, "{z}"),
            RunLength::Unbounded => write!(f, "inf"),
        }
    }
}

/// `|x - P_n(x)|`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Distance {
    Exact(BigRational),
    /// `2^{-shift} * mu` with `lo <= mu <= hi` and `1/2 <= lo`.
    Scaled {
        shift: BigUint,
        lo: BigRational,
        hi: BigRational,
    },
}

impl Distance {
    pub fn is_zero(&self) -> bool {
        matches!(self, Distance::Exact(d) if d.is_zero())
    }

    /// Rational bounds; only sensible when the shift is moderate.
    pub fn bounds(&self) -> Option<(BigRational, BigRational)> {
        match self {
            Distance::Exact(d) => Some((d.clone(), d.clone())),
            Distance::Scaled { shift, lo, hi } => {
                let s = shift.to_u64().filter(|s| *s <= 1 << 24)?;
                let f = pow2(-(s as i64));
                Some((lo * &f, hi * &f))
            }
        }
    }

    /// `log2` of the lower and upper bounds.
    pub fn log2_bounds(&self) -> (f64, f64) {
        match self {
            Distance::Exact(d) if d.is_zero() => (f64::NEG_INFINITY, f64::NEG_INFINITY),
            Distance::Exact(d) => {
                let l = crate::numerics::log2_rational(d);
                (l, l)
            }
            Distance::Scaled { shift, lo, hi } => {
                let s = shift.to_f64().unwrap_or(f64::INFINITY);
                (
                    crate::numerics::log2_rational(lo) - s,
                    crate::numerics::log2_rational(hi) - s,
                )
            }
        }
    }
}

impl fmt::Display for Distance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Distance::Exact(d) => write!(f, "{}", format_rational(d)),
            Distance::Scaled { shift, lo, hi } => write!(
                f,
                "[{}, {}]*2^-{}",
                format_rational(lo),
                format_rational(hi),
                shift
            ),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NearestDyadic {
    pub point: Dyadic,
    pub distance: Distance,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Verdict {
    /// Certified member of `D(k)` for this (smallest certified) `k`.
    InD(u64),
    NotInD,
    UnknownBeyondHorizon(u64),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Limsup {
    Infinite,
    Exact(BigRational),
    Unknown,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Membership {
    pub verdict: Verdict,
    /// `limsup z_n / 2^n`.
    pub limsup: Limsup,
}

/// Extra digits read past a run when enclosing a scaled distance.
pub const DEFAULT_EXTRA_DIGITS: u64 = 128;

fn check_bits(bits: &[u8]) -> Result<()> {
    if bits.iter().all(|b| *b <= 1) {
        Ok(())
    } else {
        Err(Error::domain("binary digits must be 0 or 1"))
    }
}

impl DigitProgram {
    pub fn finite(bits: Vec<u8>) -> Result<Self> {
        check_bits(&bits)?;
        Ok(DigitProgram::Finite(bits))
    }

    pub fn periodic(prefix: Vec<u8>, period: Vec<u8>) -> Result<Self> {
        check_bits(&prefix)?;
        check_bits(&period)?;
        if period.is_empty() {
            return Err(Error::domain("period must be non-empty"));
        }
        Ok(DigitProgram::EventuallyPeriodic { prefix, period })
    }

    pub fn schedule(filler: Vec<u8>, runs: RunSource) -> Result<Self> {
        check_bits(&filler)?;
        if filler.is_empty() {
            return Err(Error::domain("schedule filler must be non-empty"));
        }
        match &runs {
            RunSource::Explicit(list) => {
                for r in list {
                    if r.digit > 1 || r.length.is_zero() {
                        return Err(Error::domain("runs need a binary digit and positive length"));
                    }
                }
                for w in list.windows(2) {
                    let end = w[0].end();
                    let next = BigUint::from(w[1].start);
                    if next <= end || (next == end + 1u32 && w[0].digit != w[1].digit) {
                        return Err(Error::domain(format!(
                            "run at {} overlaps the run at {} or its frame",
                            w[1].start, w[0].start
                        )));
                    }
                }
            }
            RunSource::Geometric { ratio, k, digit, .. } => {
                if *ratio == 0 || *k == 0 || *digit > 1 {
                    return Err(Error::domain("geometric schedule needs ratio >= 1, k >= 1, binary digit"));
                }
            }
            RunSource::Linear { ratio, a, digit, .. } => {
                if *ratio == 0 || a <= &BigRational::zero() || *digit > 1 {
                    return Err(Error::domain("linear schedule needs ratio >= 1, a > 0, binary digit"));
                }
            }
        }
        Ok(DigitProgram::RunSchedule(Schedule {
            filler,
            runs,
            offset: 0,
        }))
    }

    /// Exact value for finite and eventually periodic programs.
    pub fn value(&self) -> Option<BigRational> {
        let bits_value = |bits: &[u8]| {
            let n = bits.iter().fold(BigInt::zero(), |acc, b| (acc << 1) + *b);
            BigRational::new(n, BigInt::one() << bits.len())
        };
        match self {
            DigitProgram::Finite(bits) => Some(bits_value(bits)),
            DigitProgram::EventuallyPeriodic { prefix, period } => {
                let pre = bits_value(prefix);
                let per_num = period.iter().fold(BigInt::zero(), |acc, b| (acc << 1) + *b);
                let per = BigRational::new(per_num, (BigInt::one() << period.len()) - 1);
                Some(pre + per * pow2(-(prefix.len() as i64)))
            }
            DigitProgram::RunSchedule(_) => None,
        }
    }

    /// True when the program denotes a dyadic rational (a constant infinite tail).
    pub fn is_dyadic(&self) -> bool {
        match self {
            DigitProgram::Finite(_) => true,
            DigitProgram::EventuallyPeriodic { period, .. } => period.iter().all(|b| *b == period[0]),
            DigitProgram::RunSchedule(s) => {
                matches!(s.runs, RunSource::Explicit(_)) && s.filler.iter().all(|b| *b == s.filler[0])
            }
        }
    }

    /// First `n` digits.
    pub fn digits(&self, n: u64) -> Vec<u8> {
        let mut stream = Stream::new(self);
        (1..=n).map(|i| stream.digit(i)).collect()
    }

    /// Digit `e_i` for `i >= 1`.
    pub fn digit(&self, i: u64) -> u8 {
        Stream::new(self).digit(i)
    }

    /// The program for `T^n x = 0.e_{n+1} e_{n+2} ...`.
    pub fn shift(&self, n: u64) -> DigitProgram {
        match self {
            DigitProgram::Finite(bits) => {
                let k = (n as usize).min(bits.len());
                DigitProgram::Finite(bits[k..].to_vec())
            }
            DigitProgram::EventuallyPeriodic { prefix, period } => {
                if (n as usize) <= prefix.len() {
                    DigitProgram::EventuallyPeriodic {
                        prefix: prefix[n as usize..].to_vec(),
                        period: period.clone(),
                    }
                } else {
                    let r = ((n - prefix.len() as u64) % period.len() as u64) as usize;
                    let mut rotated = period[r..].to_vec();
                    rotated.extend_from_slice(&period[..r]);
                    DigitProgram::EventuallyPeriodic {
                        prefix: Vec::new(),
                        period: rotated,
                    }
                }
            }
            DigitProgram::RunSchedule(s) => DigitProgram::RunSchedule(Schedule {
                offset: s.offset + n,
                ..s.clone()
            }),
        }
    }

    /// `z_n`: length of the maximal constant block starting at position `n + 1`.
    pub fn run_length(&self, n: u64) -> RunLength {
        Stream::new(self).run_length(n)
    }

    /// `S_n = sum_{j <= n} e_j 2^{-j}`.
    pub fn partial_sum(&self, n: u64) -> Dyadic {
        let digits = self.digits(n);
        let num = digits.iter().fold(BigInt::zero(), |acc, b| (acc << 1) + *b);
        Dyadic::new(num, n)
    }

    /// `P_n(x)` and `|x - P_n(x)|`; `n = 0` gives the distance to the nearest integer.
    pub fn nearest_dyadic(&self, n: u64) -> NearestDyadic {
        self.nearest_dyadic_with(n, DEFAULT_EXTRA_DIGITS)
    }

    pub fn nearest_dyadic_with(&self, n: u64, extra_digits: u64) -> NearestDyadic {
        let mut stream = Stream::new(self);
        let s_n = self.partial_sum(n);
        let next = stream.digit(n + 1);
        let point = if next == 0 {
            s_n
        } else {
            &s_n + &Dyadic::pow2_neg(n)
        };
        let distance = match self.value() {
            Some(x) => {
                let d = x - point.to_rational();
                Distance::Exact(if d < BigRational::zero() { -d } else { d })
            }
            None => match stream.run_length(n) {
                RunLength::Unbounded => Distance::Exact(BigRational::zero()),
                RunLength::Finite(z) => {
                    let shift = BigUint::from(n) + &z;
                    // mu = 0.1 d_1 d_2 ..., digits after the first change, complemented for runs of ones.
                    let after = (BigUint::from(n) + &z + 1u32).to_u64();
                    let (num, w) = match after {
                        Some(a) if a.checked_add(extra_digits).is_some() => {
                            let mut num = BigInt::one();
                            for i in 1..=extra_digits {
                                num = (num << 1) + (stream.digit(a + i) ^ next);
                            }
                            (num, extra_digits)
                        }
                        _ => (BigInt::one(), 0),
                    };
                    let lo = BigRational::new(num.clone(), BigInt::one() << (w + 1) as usize);
                    let hi = BigRational::new(num + 1, BigInt::one() << (w + 1) as usize);
                    Distance::Scaled { shift, lo, hi }
                }
            },
        };
        NearestDyadic { point, distance }
    }

    /// Symbolic evaluation of `limsup z_n / 2^n`.
    pub fn classify_membership(&self) -> Membership {
        let infinite = Membership {
            verdict: Verdict::InD(1),
            limsup: Limsup::Infinite,
        };
        let not_in = Membership {
            verdict: Verdict::NotInD,
            limsup: Limsup::Exact(BigRational::zero()),
        };
        if self.is_dyadic() {
            return infinite;
        }
        match self {
            DigitProgram::Finite(_) => infinite,
            DigitProgram::EventuallyPeriodic { .. } => not_in,
            DigitProgram::RunSchedule(s) => match &s.runs {
                RunSource::Geometric { k, .. } => Membership {
                    verdict: Verdict::InD(*k),
                    limsup: Limsup::Exact(BigRational::new(BigInt::one(), BigInt::from(*k))),
                },
                RunSource::Linear { .. } => not_in,
                RunSource::Explicit(runs) => {
                    let horizon = runs
                        .last()
                        .and_then(|r| (r.end() + 1u32).to_u64())
                        .unwrap_or(u64::MAX)
                        .saturating_sub(s.offset);
                    Membership {
                        verdict: Verdict::UnknownBeyondHorizon(horizon),
                        limsup: Limsup::Unknown,
                    }
                }
            },
        }
    }
}

/// Digit access with lazily generated runs.
struct Stream<'a> {
    program: &'a DigitProgram,
    runs: Vec<Run>,
    /// Generator state: start of the next run not yet produced.
    next_start: Option<u64>,
}

impl<'a> Stream<'a> {
    fn new(program: &'a DigitProgram) -> Self {
        let (runs, next_start) = match program {
            DigitProgram::RunSchedule(s) => match &s.runs {
                RunSource::Explicit(list) => (list.clone(), None),
                RunSource::Geometric { n1, .. } | RunSource::Linear { n1, .. } => {
                    (Vec::new(), Some(*n1))
                }
            },
            _ => (Vec::new(), None),
        };
        Stream {
            program,
            runs,
            next_start,
        }
    }

    fn schedule(&self) -> Option<&'a Schedule> {
        match self.program {
            DigitProgram::RunSchedule(s) => Some(s),
            _ => None,
        }
    }

    /// Generates runs until one starts beyond `pos` or the generator is exhausted.
    fn ensure(&mut self, pos: u64) {
        let Some(s) = self.schedule() else { return };
        while let Some(n) = self.next_start {
            if !self.runs.last().is_none_or(|r| r.start <= pos) {
                break;
            }
            let (length, ratio, digit) = match &s.runs {
                RunSource::Geometric { k, ratio, digit, .. } => {
                    let pow = BigUint::one() << n as usize;
                    (pow.div_ceil(&BigUint::from(*k)), *ratio, *digit)
                }
                RunSource::Linear { a, ratio, digit, .. } => {
                    let l = (a * BigRational::from_integer(BigInt::from(n))).ceil().to_integer();
                    (l.to_biguint().unwrap_or_default().max(BigUint::one()), *ratio, *digit)
                }
                RunSource::Explicit(_) => unreachable!("explicit runs are materialized"),
            };
            let run = Run {
                start: n,
                length,
                digit,
            };
            let after = (run.end() + 1u32).to_u64();
            self.next_start = after.and_then(|a| n.checked_mul(ratio).map(|r| r.max(a)));
            self.runs.push(run);
        }
    }

    /// Index of the last run starting at or before `p`.
    fn run_before(&mut self, p: u64) -> Option<usize> {
        self.ensure(p);
        let idx = self.runs.partition_point(|r| r.start <= p);
        idx.checked_sub(1)
    }

    fn next_run_after(&mut self, p: u64) -> Option<&Run> {
        self.ensure(p);
        let idx = self.runs.partition_point(|r| r.start <= p);
        self.runs.get(idx)
    }

    /// Digit at absolute schedule position `p`.
    fn base_digit(&mut self, p: u64) -> u8 {
        let s = self.schedule().expect("schedule stream");
        if let Some(i) = self.run_before(p) {
            let r = &self.runs[i];
            let end = r.end();
            let pb = BigUint::from(p);
            if p == r.start {
                return 1 - r.digit;
            }
            if pb <= end {
                return r.digit;
            }
            if pb == end + 1u32 {
                return 1 - r.digit;
            }
        }
        s.filler[((p - 1) % s.filler.len() as u64) as usize]
    }

    fn digit(&mut self, i: u64) -> u8 {
        match self.program {
            DigitProgram::Finite(bits) => bits.get(i as usize - 1).copied().unwrap_or(0),
            DigitProgram::EventuallyPeriodic { prefix, period } => {
                let i = i as usize - 1;
                if i < prefix.len() {
                    prefix[i]
                } else {
                    period[(i - prefix.len()) % period.len()]
                }
            }
            DigitProgram::RunSchedule(s) => self.base_digit(i + s.offset),
        }
    }

    fn run_length(&mut self, n: u64) -> RunLength {
        match self.program {
            DigitProgram::Finite(bits) => {
                let len = bits.len() as u64;
                let b = self.digit(n + 1);
                let mut p = n + 1;
                while p <= len && self.digit(p) == b {
                    p += 1;
                }
                if p > len && b == 0 {
                    RunLength::Unbounded
                } else {
                    RunLength::Finite(BigUint::from(p - n - 1))
                }
            }
            DigitProgram::EventuallyPeriodic { prefix, period } => {
                let b = self.digit(n + 1);
                let constant_tail = period.iter().all(|d| *d == period[0]);
                let limit = n + 1 + (prefix.len() + 2 * period.len()) as u64;
                let mut p = n + 1;
                while self.digit(p + 1) == b {
                    p += 1;
                    if constant_tail && p > prefix.len() as u64 && period[0] == b {
                        return RunLength::Unbounded;
                    }
                    debug_assert!(p <= limit, "periodic scan exceeded its bound");
                }
                RunLength::Finite(BigUint::from(p - n))
            }
            DigitProgram::RunSchedule(s) => self.schedule_run_length(n + 1 + s.offset),
        }
    }

    /// Length of the constant block starting at absolute position `p0`.
    fn schedule_run_length(&mut self, p0: u64) -> RunLength {
        let s = self.schedule().expect("schedule stream");
        let constant_filler = s.filler.iter().all(|d| *d == s.filler[0]);
        let b = self.base_digit(p0);
        let mut p = p0;
        loop {
            // Inside a run interior: jump to its end, which is followed by a frame digit.
            if let Some(i) = self.run_before(p) {
                let r = &self.runs[i];
                if p > r.start && BigUint::from(p) <= r.end() {
                    return RunLength::Finite(r.end() - BigUint::from(p0) + 1u32);
                }
            }
            let in_filler = self.run_before(p).is_none_or(|i| {
                let r = &self.runs[i];
                p != r.start && BigUint::from(p) > r.end() + 1u32
            });
            if in_filler && constant_filler && s.filler[0] == b {
                match self.next_run_after(p) {
                    None => return RunLength::Unbounded,
                    Some(r) => {
                        let target = r.start - 1;
                        if target > p {
                            p = target;
                            continue;
                        }
                    }
                }
            }
            if self.base_digit(p + 1) != b {
                return RunLength::Finite(BigUint::from(p - p0 + 1));
            }
            p += 1;
        }
    }
}

fn bits_to_string(bits: &[u8]) -> String {
    bits.iter().map(|b| if *b == 1 { '1' } else { '0' }).collect()
}

fn parse_bits(s: &str) -> Result<Vec<u8>> {
    s.trim()
        .chars()
        .map(|c| match c {
            '0' => Ok(0),
            '1' => Ok(1),
            _ => Err(Error::parse(format!("not a binary digit: {c:?}"))),
        })
        .collect()
}

fn parse_kv(body: &str) -> Result<Vec<(String, String)>> {
    body.split(',')
        .map(|kv| {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| Error::parse(format!("expected key=value, got {kv:?}")))?;
            Ok((k.trim().to_string(), v.trim().to_string()))
        })
        .collect()
}

fn take<T: std::str::FromStr>(kv: &[(String, String)], key: &str) -> Result<T> {
    let v = kv
        .iter()
        .find(|(k, _)| k == key)
        .ok_or_else(|| Error::parse(format!("missing parameter {key}")))?;
    v.1.parse()
        .map_err(|_| Error::parse(format!("bad value for {key}: {:?}", v.1)))
}

impl std::str::FromStr for DigitProgram {
    type Err = Error;

    /// `finite:<bits>`, `periodic:<prefix>;<period>`,
    /// `schedule:fill=<bits>;runs=[(n,L,b),...]`,
    /// `schedule:fill=<bits>;geom(n1=..,ratio=..,k=..,digit=..)`,
    /// `schedule:fill=<bits>;lin(n1=..,ratio=..,a=p/q,digit=..)`,
    /// each schedule optionally followed by `;offset=<int>`.
    fn from_str(text: &str) -> Result<Self> {
        let text = text.trim();
        let (kind, body) = text
            .split_once(':')
            .ok_or_else(|| Error::parse(format!("missing program kind in {text:?}")))?;
        match kind {
            "finite" => DigitProgram::finite(parse_bits(body)?),
            "periodic" => {
                let (pre, per) = body
                    .split_once(';')
                    .ok_or_else(|| Error::parse("periodic programs need <prefix>;<period>"))?;
                DigitProgram::periodic(parse_bits(pre)?, parse_bits(per)?)
            }
            "schedule" => {
                let mut parts = body.split(';');
                let fill = parts
                    .next()
                    .and_then(|p| p.trim().strip_prefix("fill="))
                    .ok_or_else(|| Error::parse("schedule needs fill=<bits> first"))?;
                let filler = parse_bits(fill)?;
                let spec = parts
                    .next()
                    .ok_or_else(|| Error::parse("schedule needs runs=[...], geom(...) or lin(...)"))?
                    .trim();
                let runs = if let Some(list) = spec.strip_prefix("runs=") {
                    RunSource::Explicit(parse_runs(list)?)
                } else if let Some(args) = spec.strip_prefix("geom(").and_then(|a| a.strip_suffix(')')) {
                    let kv = parse_kv(args)?;
                    RunSource::Geometric {
                        n1: take(&kv, "n1")?,
                        ratio: take(&kv, "ratio")?,
                        k: take(&kv, "k")?,
                        digit: take(&kv, "digit")?,
                    }
                } else if let Some(args) = spec.strip_prefix("lin(").and_then(|a| a.strip_suffix(')')) {
                    let kv = parse_kv(args)?;
                    let a: String = take(&kv, "a")?;
                    RunSource::Linear {
                        n1: take(&kv, "n1")?,
                        ratio: take(&kv, "ratio")?,
                        a: parse_rational(&a)?,
                        digit: take(&kv, "digit")?,
                    }
                } else {
                    return Err(Error::parse(format!("unknown run specification {spec:?}")));
                };
                let mut program = DigitProgram::schedule(filler, runs)?;
                if let Some(extra) = parts.next() {
                    let off = extra
                        .trim()
                        .strip_prefix("offset=")
                        .ok_or_else(|| Error::parse(format!("unexpected schedule suffix {extra:?}")))?;
                    let off: u64 = off
                        .parse()
                        .map_err(|_| Error::parse(format!("bad offset {off:?}")))?;
                    program = program.shift(off);
                }
                if parts.next().is_some() {
                    return Err(Error::parse("trailing schedule fields"));
                }
                Ok(program)
            }
            other => Err(Error::parse(format!("unknown program kind {other:?}"))),
        }
    }
}

fn parse_runs(list: &str) -> Result<Vec<Run>> {
    let inner = list
        .trim()
        .strip_prefix('[')
        .and_then(|l| l.strip_suffix(']'))
        .ok_or_else(|| Error::parse("runs must be written [(n,L,b),...]"))?;
    let mut runs = Vec::new();
    let mut rest = inner.trim();
    while !rest.is_empty() {
        let open = rest
            .strip_prefix('(')
            .ok_or_else(|| Error::parse(format!("expected '(' in runs near {rest:?}")))?;
        let close = open
            .find(')')
            .ok_or_else(|| Error::parse("unclosed run tuple"))?;
        let fields: Vec<&str> = open[..close].split(',').map(str::trim).collect();
        if fields.len() != 3 {
            return Err(Error::parse("each run is (n,L,b)"));
        }
        let bad = || Error::parse(format!("bad run tuple ({})", &open[..close]));
        runs.push(Run {
            start: fields[0].parse().map_err(|_| bad())?,
            length: fields[1].parse().map_err(|_| bad())?,
            digit: fields[2].parse().map_err(|_| bad())?,
        });
        rest = open[close + 1..].trim_start();
        rest = rest.strip_prefix(',').unwrap_or(rest).trim_start();
    }
    Ok(runs)
}

impl fmt::Display for DigitProgram {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DigitProgram::Finite(bits) => write!(f, "finite:{}", bits_to_string(bits)),
            DigitProgram::EventuallyPeriodic { prefix, period } => {
                write!(f, "periodic:{};{}", bits_to_string(prefix), bits_to_string(period))
            }
            DigitProgram::RunSchedule(s) => {
                write!(f, "schedule:fill={};", bits_to_string(&s.filler))?;
                match &s.runs {
                    RunSource::Explicit(runs) => {
                        let items: Vec<String> = runs
                            .iter()
                            .map(|r| format!("({},{},{})", r.start, r.length, r.digit))
                            .collect();
                        write!(f, "runs=[{}]", items.join(","))?;
                    }
                    RunSource::Geometric { n1, ratio, k, digit } => {
                        write!(f, "geom(n1={n1},ratio={ratio},k={k},digit={digit})")?;
                    }
                    RunSource::Linear { n1, ratio, a, digit } => {
                        write!(f, "lin(n1={n1},ratio={ratio},a={},digit={digit})", format_rational(a))?;
                    }
                }
                if s.offset > 0 {
                    write!(f, ";offset={}", s.offset)?;
                }
                Ok(())
            }
        }
    }
}

/// `x mod 1` scaled: the rational `2^n x - floor(2^n x)` for exact programs.
pub fn doubling_orbit_point(x: &BigRational, n: u64) -> BigRational {
    let y = x * pow2(n as i64);
    let f = y.numer().div_floor(y.denom());
    y - BigRational::from_integer(f)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(s: &str) -> DigitProgram {
        s.parse().unwrap()
    }

    fn q(a: i64, b: i64) -> BigRational {
        BigRational::new(a.into(), b.into())
    }

    #[test]
    fn digits_of_basic_programs() {
        assert_eq!(p("periodic:;01").digits(4), vec![0, 1, 0, 1]);
        assert_eq!(p("finite:1").digits(3), vec![1, 0, 0]);
        assert_eq!(
            p("schedule:fill=10;runs=[(3,5,0)]").digits(9),
            vec![1, 0, 1, 0, 0, 0, 0, 0, 1]
        );
    }

    #[test]
    fn shifts() {
        assert_eq!(p("periodic:;01").shift(1).value(), Some(q(2, 3)));
        assert_eq!(p("finite:101").shift(2), p("finite:1"));
        let s = p("schedule:fill=10;runs=[(3,5,0)]");
        assert_eq!(s.shift(0), s);
        assert_eq!(s.shift(2).digits(6), s.digits(8)[2..].to_vec());
        assert_eq!(s.shift(3).to_string(), "schedule:fill=10;runs=[(3,5,0)];offset=3");
    }

    #[test]
    fn run_lengths() {
        for n in 1..10 {
            assert_eq!(p("periodic:;01").run_length(n), RunLength::Finite(1u32.into()));
        }
        assert_eq!(p("finite:101").run_length(3), RunLength::Unbounded);
        assert_eq!(p("finite:101").run_length(1), RunLength::Finite(1u32.into()));
        assert_eq!(p("schedule:fill=10;runs=[(3,8,0)]").run_length(3), RunLength::Finite(8u32.into()));
        assert_eq!(p("periodic:1;0").run_length(1), RunLength::Unbounded);
        assert_eq!(p("schedule:fill=0;runs=[(3,2,1)]").run_length(6), RunLength::Unbounded);
    }

    #[test]
    fn nearest_dyadic_examples() {
        let third = p("periodic:;01");
        let nd = third.nearest_dyadic(2);
        assert_eq!(nd.point, Dyadic::new(1, 2));
        assert_eq!(nd.distance, Distance::Exact(q(1, 12)));
        let nd = third.nearest_dyadic(3);
        assert_eq!(nd.point, Dyadic::new(3, 3));
        assert_eq!(nd.distance, Distance::Exact(q(1, 24)));
        let half = p("finite:1");
        for n in 1..5 {
            let nd = half.nearest_dyadic(n);
            assert_eq!(nd.point, Dyadic::new(1, 1));
            assert!(nd.distance.is_zero());
        }
    }

    #[test]
    fn geometric_schedule_runs() {
        let g = p("schedule:fill=0;geom(n1=1,ratio=2,k=1,digit=0)");
        // Runs start at 1, 4, 21 with lengths 2, 16, 2^21.
        assert_eq!(g.run_length(1), RunLength::Finite(2u32.into()));
        assert_eq!(g.run_length(4), RunLength::Finite(16u32.into()));
        assert_eq!(g.run_length(21), RunLength::Finite(BigUint::one() << 21));
        let m = g.classify_membership();
        assert_eq!(m.verdict, Verdict::InD(1));
        assert_eq!(m.limsup, Limsup::Exact(q(1, 1)));
    }

    #[test]
    fn membership_classes() {
        assert_eq!(p("periodic:;01").classify_membership().verdict, Verdict::NotInD);
        assert_eq!(p("finite:1").classify_membership().limsup, Limsup::Infinite);
        assert!(matches!(
            p("schedule:fill=10;runs=[(3,5,0)]").classify_membership().verdict,
            Verdict::UnknownBeyondHorizon(9)
        ));
        assert_eq!(
            p("schedule:fill=10;lin(n1=2,ratio=2,a=1,digit=1)").classify_membership().verdict,
            Verdict::NotInD
        );
    }

    #[test]
    fn parse_round_trip_and_errors() {
        for s in [
            "finite:1011",
            "periodic:1;01",
            "schedule:fill=10;runs=[(3,5,0),(12,2,1)]",
            "schedule:fill=0;geom(n1=1,ratio=2,k=3,digit=1)",
            "schedule:fill=01;lin(n1=2,ratio=2,a=1/2,digit=0);offset=4",
        ] {
            assert_eq!(p(s).to_string(), s);
        }
        assert!("periodic:1;".parse::<DigitProgram>().is_err());
        assert!("finite:12".parse::<DigitProgram>().is_err());
        assert!("schedule:fill=10;runs=[(3,5,0),(8,2,1)]".parse::<DigitProgram>().is_err());
        assert!("decimal:0.5".parse::<DigitProgram>().is_err());
    }

    #[test]
    fn doubling_orbit() {
        assert_eq!(doubling_orbit_point(&q(1, 3), 1), q(2, 3));
        assert_eq!(doubling_orbit_point(&q(1, 3), 2), q(1, 3));
    }
}
