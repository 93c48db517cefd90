use std::collections::HashMap;
use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use super::tree::{frostman_measure, MeasureTree};
use super::{separation_holds, SymExp, WillowSchedule};
use crate::error::{Error, Result};
use crate::gauge::GaugeSpec;
use crate::limsup::Limits;
use crate::numerics::{format_rational, log2_rational, pow2};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Constraint {
    /// `M_k A(k-1, M_{k-1}) > 1`.
    A,
    /// `N_{k,j}(J)` within a factor 4 of `g(j,k) |J|`.
    B,
    /// At most `4 g(j,k) |I| + 2` members of family `j` meet `I`.
    C,
    /// Gaps between generation-`k` intervals at least `A(k, M_k) / 2`.
    D,
    /// Grid exponents increase and each generation fits inside the previous one.
    Nesting,
}

impl fmt::Display for Constraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Constraint::A => "A",
            Constraint::B => "B",
            Constraint::C => "C",
            Constraint::D => "D",
            Constraint::Nesting => "nesting",
        };
        f.write_str(s)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Status {
    /// Verified exactly, by enumeration or exact exponent comparison.
    Pass(String),
    /// Verified from closed-form counts without enumeration.
    SymbolicPass(String),
    Fail(String),
}

impl Status {
    pub fn passed(&self) -> bool {
        !matches!(self, Status::Fail(_))
    }

    fn label(&self) -> &'static str {
        match self {
            Status::Pass(_) => "pass",
            Status::SymbolicPass(_) => "symbolic-pass",
            Status::Fail(_) => "fail",
        }
    }

    fn detail(&self) -> &str {
        match self {
            Status::Pass(d) | Status::SymbolicPass(d) | Status::Fail(d) => d,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConstraintRow {
    pub constraint: Constraint,
    pub k: usize,
    pub status: Status,
}

/// Constants measured on enumerated generations.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct MeasuredConstants {
    pub k: usize,
    /// Range of `N_{k,j}(J) / (g(j,k) |J|)`.
    pub count_ratio: Option<(f64, f64)>,
    /// Largest `(#members meeting I - 2) / (g |I|)` over dyadic `I`.
    pub spread: Option<f64>,
    /// Smallest gap divided by `A(k, M_k)`.
    pub gap: Option<f64>,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ConstraintReport {
    pub rows: Vec<ConstraintRow>,
    pub constants: Vec<MeasuredConstants>,
}

impl ConstraintReport {
    pub fn all_pass(&self) -> bool {
        self.rows.iter().all(|r| r.status.passed())
    }

    pub fn status(&self, c: Constraint, k: usize) -> Option<&Status> {
        self.rows.iter().find(|r| r.constraint == c && r.k == k).map(|r| &r.status)
    }

    pub fn failures(&self) -> impl Iterator<Item = &ConstraintRow> {
        self.rows.iter().filter(|r| !r.status.passed())
    }

    pub fn to_json(&self) -> serde_json::Value {
        let rows: Vec<_> = self
            .rows
            .iter()
            .map(|r| {
                json!({
                    "constraint": r.constraint.to_string(),
                    "k": r.k,
                    "status": r.status.label(),
                    "detail": r.status.detail(),
                })
            })
            .collect();
        let constants: Vec<_> = self
            .constants
            .iter()
            .map(|c| {
                json!({
                    "k": c.k,
                    "count_ratio": c.count_ratio.map(|(a, b)| vec![a, b]),
                    "spread": c.spread,
                    "gap": c.gap,
                })
            })
            .collect();
        json!({ "rows": rows, "constants": constants })
    }
}

fn pow2_f64(e: i64) -> f64 {
    (e as f64).exp2()
}

fn nesting(s: &WillowSchedule, k: usize) -> Status {
    if k == 1 {
        return Status::Pass("generation 1 lies in [0, 1]".into());
    }
    let g = s.generation(k);
    let p = s.generation(k - 1);
    let prev_e = s.previous_min_exponent(k);
    if g.n < p.n + p.m {
        return Status::Fail(format!(
            "grid exponent n_{k}+1 = {} does not exceed n_{}+M_{} = {}",
            g.n + 1,
            k - 1,
            k - 1,
            p.n + p.m
        ));
    }
    if SymExp::int(g.n) < prev_e {
        return Status::Fail(format!("n_{k} = {} is below e({}, M_{}) = {prev_e}", g.n, k - 1, k - 1));
    }
    Status::Pass(format!("n_{k} = {} >= max(n+M, e) of generation {}", g.n, k - 1))
}

fn growth(s: &WillowSchedule, k: usize) -> Status {
    let m = s.generation(k).m;
    let prev_e = s.previous_min_exponent(k);
    let holds = prev_e.value().is_some_and(|e| e < 64 && u128::from(m) > 1u128 << e);
    let text = format!("M_{k} A({}, M_{}) = {m} * 2^-{prev_e}", k - 1, k.saturating_sub(1));
    if holds {
        Status::Pass(format!("{text} > 1"))
    } else {
        Status::Fail(format!("{text} <= 1"))
    }
}

fn separation(s: &WillowSchedule, k: usize) -> Status {
    let g = s.generation(k);
    let text = format!(
        "2^-{} - 2^-{} against 2^-{} / 2",
        g.n + g.m,
        s.e(k, 1),
        s.e(k, g.m)
    );
    if separation_holds(s, k) {
        Status::Pass(text)
    } else {
        Status::Fail(text)
    }
}

/// `N_{k,j}(J) / (g(j,k)|J|)` over every parent and family.
fn enumerated_counts(s: &WillowSchedule, t: &MeasureTree, k: usize) -> (Status, (f64, f64)) {
    let g = s.generation(k);
    let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
    let mut witness = None;
    for &p in &t.by_generation[k - 1] {
        let parent = &t.nodes[p];
        let mut counts = vec![0u64; g.m as usize];
        for &c in &parent.children {
            counts[(t.nodes[c].j - 1) as usize] += 1;
        }
        for (idx, &n) in counts.iter().enumerate() {
            let j = idx as u64 + 1;
            let r = n as f64 * pow2_f64(parent.e as i64 - (g.n + j) as i64);
            lo = lo.min(r);
            hi = hi.max(r);
            if !(0.25..=4.0).contains(&r) && witness.is_none() {
                witness = Some(format!(
                    "N_{{{k},{j}}} = {n} below the interval at {} of length 2^-{}",
                    format_rational(&parent.lo()),
                    parent.e
                ));
            }
        }
    }
    let status = match witness {
        Some(w) => Status::Fail(w),
        None => Status::Pass(format!("ratios in [{lo}, {hi}]")),
    };
    (status, (lo, hi))
}

/// Members of each family meeting closed dyadic boxes `[i 2^-t, (i+1) 2^-t]`,
/// for every `t` up to one past the family grid.
fn enumerated_spread(s: &WillowSchedule, t: &MeasureTree, k: usize) -> (Status, f64) {
    let g = s.generation(k);
    let layer = &t.by_generation[k];
    let width = layer.iter().map(|&i| t.nodes[i].e).max().unwrap_or(0);
    let mut worst = 0.0f64;
    let mut witness = None;
    for j in 1..=g.m {
        let members: Vec<(BigInt, BigInt)> = layer
            .iter()
            .map(|&i| &t.nodes[i])
            .filter(|n| n.j == j)
            .map(|n| {
                let l = n.left.scaled_numerator(width);
                let r = &l + (BigInt::from(1) << (width - n.e) as usize);
                (l, r)
            })
            .collect();
        let grid = g.n + j;
        for scale in 0..=(grid + 1).min(width) {
            let shift = (width - scale) as usize;
            let mut boxes: HashMap<BigInt, u64> = HashMap::new();
            for (l, r) in &members {
                let mut first: BigInt = l >> shift;
                if &(&first << shift) == l && first > BigInt::zero() {
                    first -= 1;
                }
                let last: BigInt = r >> shift;
                let mut b = first;
                while b <= last {
                    *boxes.entry(b.clone()).or_insert(0) += 1;
                    b += 1;
                }
            }
            let most = boxes.values().copied().max().unwrap_or(0);
            let g_len = pow2_f64(grid as i64 - scale as i64);
            let spread = (most as f64 - 2.0) / g_len;
            worst = worst.max(spread);
            if most as f64 > 4.0 * g_len + 2.0 && witness.is_none() {
                witness = Some(format!("{most} members of family {j} meet a box of length 2^-{scale}"));
            }
        }
    }
    let status = match witness {
        Some(w) => Status::Fail(w),
        None => Status::Pass(format!("largest excess per g|I| is {worst}")),
    };
    (status, worst)
}

fn enumerated_gap(s: &WillowSchedule, t: &MeasureTree, k: usize) -> (Status, Option<f64>) {
    let g = s.generation(k);
    let layer = &t.by_generation[k];
    let mut best: Option<BigRational> = None;
    for w in layer.windows(2) {
        let gap = t.nodes[w[1]].lo() - t.nodes[w[0]].hi();
        if best.as_ref().is_none_or(|b| &gap < b) {
            best = Some(gap);
        }
    }
    let Some(gap) = best else {
        return (Status::Pass("a single interval".into()), None);
    };
    let e_last = s.e(k, g.m).value().expect("enumerable");
    let ratio = &gap * pow2(e_last as i64);
    let c = log2_rational(&ratio).exp2();
    let half = BigRational::new(1.into(), 2.into());
    if gap.is_zero() || ratio < half {
        (Status::Fail(format!("gap {} is below A(k, M_k)/2", format_rational(&gap))), Some(c))
    } else {
        (Status::Pass(format!("smallest gap is {c:.3e} A(k, M_k)")), Some(c))
    }
}

/// Checks every constraint for every generation.
///
/// Generations that can be enumerated are checked interval by interval; the
/// rest use the closed-form counts `N_{k,j}(J) = 2^{n_k + j - e_J - [j > 1]}`,
/// which hold once nesting does.
pub fn check_constraints(s: &WillowSchedule, limits: &Limits) -> Result<ConstraintReport> {
    let _ = limits;
    let enumerable = s.generations.iter().take_while(|g| g.enumerable).count();
    let tree = if enumerable > 0 {
        match frostman_measure(s, enumerable) {
            Ok(t) => Some(t),
            Err(Error::NonEnumerable { .. }) => None,
            Err(e) => return Err(e),
        }
    } else {
        None
    };
    let mut report = ConstraintReport::default();
    for k in 1..=s.depth() {
        let nest = nesting(s, k);
        let nested = nest.passed();
        let mut push = |c, status| report.rows.push(ConstraintRow { constraint: c, k, status });
        push(Constraint::Nesting, nest);
        push(Constraint::A, growth(s, k));
        let mut consts = MeasuredConstants { k, ..Default::default() };
        match tree.as_ref().filter(|t| k <= t.depth()) {
            Some(t) => {
                let (b, ratio) = enumerated_counts(s, t, k);
                consts.count_ratio = Some(ratio);
                push(Constraint::B, b);
                let (c, spread) = enumerated_spread(s, t, k);
                consts.spread = Some(spread);
                push(Constraint::C, c);
                let (d, gap) = enumerated_gap(s, t, k);
                consts.gap = gap;
                let d = match (d, separation(s, k)) {
                    (Status::Pass(_), Status::Fail(w)) => Status::Fail(w),
                    (d, _) => d,
                };
                push(Constraint::D, d);
            }
            None => {
                let symbolic = |ok: bool, text: &str| {
                    if ok {
                        Status::SymbolicPass(text.to_string())
                    } else {
                        Status::Fail(format!("nesting fails, so {text} is not established"))
                    }
                };
                push(Constraint::B, symbolic(nested, "N_{k,j}(J) / (g|J|) in {1, 1/2}"));
                push(
                    Constraint::C,
                    symbolic(nested, "members sit on distinct points of the 2^-(n+j) grid"),
                );
                push(Constraint::D, separation(s, k));
            }
        }
        report.constants.push(consts);
    }
    Ok(report)
}

fn log2_gauge(h: &GaugeSpec, len: &BigRational) -> Option<f64> {
    let l = log2_rational(len);
    match h {
        GaugeSpec::Power(s) => Some(s.to_f64().unwrap_or(f64::NAN) * l),
        GaugeSpec::LogPower(s) => {
            if l >= 0.0 {
                None
            } else {
                Some(-s.to_f64().unwrap_or(f64::NAN) * (-l * std::f64::consts::LN_2).log2())
            }
        }
    }
}

/// `mu(I) / h(|I|)`; zero where `h` is infinite or the mass vanishes.
fn ratio(h: &GaugeSpec, mass: &BigRational, len: &BigRational) -> f64 {
    if mass.is_zero() {
        return 0.0;
    }
    match log2_gauge(h, len) {
        None => 0.0,
        Some(lh) => (log2_rational(mass) - lh).exp2(),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AuditSource {
    Generation,
    Span,
    Probe,
}

impl fmt::Display for AuditSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            AuditSource::Generation => "generation",
            AuditSource::Span => "span",
            AuditSource::Probe => "probe",
        })
    }
}

#[derive(Clone, Debug)]
pub struct FrostmanAudit {
    pub gauge: GaugeSpec,
    pub max_ratio: f64,
    pub argmax: (BigRational, BigRational),
    pub source: AuditSource,
    /// Largest ratio among the random probes alone.
    pub probe_max: f64,
    pub probes: usize,
    pub seed: u64,
}

impl FrostmanAudit {
    pub fn to_json(&self) -> serde_json::Value {
        json!({
            "gauge": self.gauge.to_string(),
            "max_ratio": self.max_ratio,
            "argmax_interval": [format_rational(&self.argmax.0), format_rational(&self.argmax.1)],
            "source": self.source.to_string(),
            "probe_max": self.probe_max,
            "probes": self.probes,
            "seed": self.seed,
        })
    }
}

/// Largest `mu(I) / h(|I|)` over generation-`k` intervals, for each `k >= 1`.
pub fn generation_ratio_profile(t: &MeasureTree, h: &GaugeSpec) -> Vec<f64> {
    t.by_generation[1..]
        .iter()
        .map(|layer| {
            layer
                .iter()
                .map(|&i| ratio(h, &t.nodes[i].weight, &t.nodes[i].length()))
                .fold(0.0, f64::max)
        })
        .collect()
}

/// Largest `mu(I) / h(|I|)` over every interval of the tree, spans of
/// adjacent siblings, whole sibling rows, and `probes` seeded random intervals.
///
/// Probe lengths are `m 2^{-(t+17)}` with `t` uniform up to the deepest
/// exponent and `m` uniform in `[2^16, 2^17)`. Each probe is placed uniformly
/// among positions meeting a random interval of the deepest generation whose
/// intervals are no shorter than the probe, where all its mass lives.
pub fn frostman_audit(t: &MeasureTree, h: &GaugeSpec, probes: usize, seed: u64) -> Result<FrostmanAudit> {
    let mut best = (0.0f64, (BigRational::zero(), BigRational::zero()), AuditSource::Generation);
    let mut consider = |r: f64, lo: BigRational, hi: BigRational, src: AuditSource| {
        if r > best.0 {
            best = (r, (lo, hi), src);
        }
    };
    for n in &t.nodes {
        consider(ratio(h, &n.weight, &n.length()), n.lo(), n.hi(), AuditSource::Generation);
        if n.children.len() >= 2 {
            for w in n.children.windows(2) {
                let (a, b) = (&t.nodes[w[0]], &t.nodes[w[1]]);
                let (lo, hi) = (a.lo(), b.hi());
                let mass = &a.weight + &b.weight;
                consider(ratio(h, &mass, &(&hi - &lo)), lo, hi, AuditSource::Span);
            }
            let first = &t.nodes[n.children[0]];
            let last = &t.nodes[*n.children.last().expect("non-empty")];
            let (lo, hi) = (first.lo(), last.hi());
            consider(ratio(h, &n.weight, &(&hi - &lo)), lo, hi, AuditSource::Span);
        }
    }
    let min_len: Vec<u64> = t
        .by_generation
        .iter()
        .map(|layer| layer.iter().map(|&i| t.nodes[i].e).max().unwrap_or(0))
        .collect();
    let deepest = *min_len.last().expect("root layer");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut probe_max = 0.0f64;
    for _ in 0..probes {
        let scale: u64 = rng.gen_range(0..=deepest);
        let m: u64 = rng.gen_range(1u64 << 16..1u64 << 17);
        let len = BigRational::from_integer(m.into()) * pow2(-(scale as i64 + 17));
        let anchor_gen = (0..min_len.len())
            .rev()
            .find(|&k| pow2(-(min_len[k] as i64)) >= len)
            .unwrap_or(0);
        let layer = &t.by_generation[anchor_gen];
        let node = &t.nodes[layer[rng.gen_range(0..layer.len())]];
        let window = &len + node.length();
        let r: u64 = rng.gen();
        let lo = node.lo() - &len + window * BigRational::from_integer(r.into()) * pow2(-64);
        let hi = &lo + &len;
        let mass = t.measure(&lo, &hi);
        let q = ratio(h, &mass, &len);
        probe_max = probe_max.max(q);
        consider(q, lo, hi, AuditSource::Probe);
    }
    let (max_ratio, argmax, source) = best;
    Ok(FrostmanAudit {
        gauge: h.clone(),
        max_ratio,
        argmax,
        source,
        probe_max,
        probes,
        seed,
    })
}
