//! Willow sets: generation schedules, the Frostman measure tree, constraint
//! checks and the Frostman-condition audit.
//!
//! Generation `k` has families `j = 1..=M_k`. Family `j` consists of the
//! intervals of length `A(k,j) = 2^{-e(k,j)}` whose left endpoints are grid
//! points `l/2^{n_k+j}` (odd `l` for `j > 1`) inside a generation-`(k-1)`
//! interval.

mod audit;
mod tree;

use std::cmp::Ordering;
use std::fmt;

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive};
use serde_json::json;

use crate::error::{Error, Result};
use crate::limsup::Limits;
use crate::numerics::ball::{self, Real};

pub use audit::{
    check_constraints, frostman_audit, generation_ratio_profile, AuditSource, Constraint, ConstraintReport,
    ConstraintRow, FrostmanAudit, MeasuredConstants, Status,
};
pub use tree::{build_generation, frostman_measure, GenerationBlock, MeasureTree, Node};

/// Largest family count `M_k` that is enumerated.
pub const MAX_FAMILIES: u64 = 1 << 12;
/// Largest number of tree nodes that is materialized.
pub const MAX_NODES: usize = 1 << 22;

/// `lin + 2^pow` (or just `lin`), exact for exponents far beyond machine range.
#[derive(Clone, Copy, Debug)]
pub struct SymExp {
    pub lin: u64,
    pub pow: Option<u64>,
}

impl SymExp {
    pub fn int(v: u64) -> Self {
        SymExp { lin: v, pow: None }
    }

    pub fn value(&self) -> Option<u64> {
        match self.pow {
            None => Some(self.lin),
            Some(p) if p < 64 => self.lin.checked_add(1u64 << p),
            Some(_) => None,
        }
    }

    fn to_biguint(self) -> BigUint {
        let base = BigUint::from(self.lin);
        match self.pow {
            None => base,
            Some(p) => base + (BigUint::one() << p as usize),
        }
    }

    pub fn log2(&self) -> f64 {
        match self.pow {
            None => (self.lin as f64).log2(),
            Some(p) => p as f64 + (1.0 + self.lin as f64 * (-(p as f64)).exp2()).log2(),
        }
    }
}

impl Ord for SymExp {
    fn cmp(&self, other: &Self) -> Ordering {
        let (pa, pb) = (self.pow, other.pow);
        let big = |p: Option<u64>| p.is_some_and(|p| p >= 66);
        match (pa, pb) {
            // 2^pa - 2^pb >= 2^65 exceeds any difference of the linear parts.
            (Some(a), Some(b)) if a != b && (big(pa) || big(pb)) => a.cmp(&b),
            (Some(_), None) if big(pa) => Ordering::Greater,
            (None, Some(_)) if big(pb) => Ordering::Less,
            _ => self.to_biguint().cmp(&other.to_biguint()),
        }
    }
}

impl PartialEq for SymExp {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for SymExp {}

impl PartialOrd for SymExp {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for SymExp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.value(), self.pow) {
            (Some(v), _) => write!(f, "{v}"),
            (None, Some(p)) => write!(f, "{}+2^{}", self.lin, p),
            (None, None) => unreachable!("plain values always fit"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    /// `e(k,j) = n_k + j + 2^{n_k + j}`.
    TrueDobinski,
    /// `e(k,j) = (1 + c)(n_k + j)` with the family count held at `M_1`.
    Tamed(u64),
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Mode::TrueDobinski => write!(f, "true-dobinski"),
            Mode::Tamed(c) => write!(f, "tamed({c})"),
        }
    }
}

impl std::str::FromStr for Mode {
    type Err = Error;

    /// `true` or `tamed:<c>`.
    fn from_str(text: &str) -> Result<Self> {
        match text.trim() {
            "true" | "true-dobinski" => Ok(Mode::TrueDobinski),
            t => {
                let c = t
                    .strip_prefix("tamed:")
                    .ok_or_else(|| Error::parse(format!("mode must be true or tamed:<c>, got {text:?}")))?;
                let c: u64 = c.parse().map_err(|_| Error::parse(format!("bad tamed constant {c:?}")))?;
                if c == 0 {
                    return Err(Error::domain("tamed constant must be positive"));
                }
                Ok(Mode::Tamed(c))
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Generation {
    pub k: usize,
    pub n: u64,
    pub m: u64,
    /// False when the generation can only be handled in exponent space.
    pub enumerable: bool,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WillowSchedule {
    pub mode: Mode,
    pub generations: Vec<Generation>,
}

/// The constant of the separation condition used by the planner.
pub const SEPARATION_NUM: u64 = 1;
pub const SEPARATION_DEN: u64 = 2;

impl WillowSchedule {
    /// A schedule from explicit `(n_k, M_k)` pairs, without planning.
    pub fn custom(mode: Mode, params: &[(u64, u64)], limits: &Limits) -> Result<Self> {
        if params.is_empty() || params.iter().any(|(_, m)| *m == 0) {
            return Err(Error::domain("a schedule needs at least one generation and M_k >= 1"));
        }
        let mut s = WillowSchedule {
            mode,
            generations: Vec::new(),
        };
        for (i, (n, m)) in params.iter().enumerate() {
            s.push(i + 1, *n, *m, limits)?;
        }
        Ok(s)
    }

    fn push(&mut self, k: usize, n: u64, m: u64, limits: &Limits) -> Result<()> {
        n.checked_add(m)
            .ok_or_else(|| Error::ExponentCap { exponent: format!("{n}+{m}"), cap: u64::MAX })?;
        let prev_ok = self.generations.last().is_none_or(|g| g.enumerable);
        self.generations.push(Generation {
            k,
            n,
            m,
            enumerable: false,
        });
        let last = self.e(k, m);
        let enumerable = prev_ok && m <= MAX_FAMILIES && last.value().is_some_and(|e| e <= limits.exponent_cap);
        self.generations.last_mut().expect("just pushed").enumerable = enumerable;
        Ok(())
    }

    pub fn depth(&self) -> usize {
        self.generations.len()
    }

    /// Generation `k` (1-based).
    pub fn generation(&self, k: usize) -> &Generation {
        &self.generations[k - 1]
    }

    /// `e(k, j)`, with `A(k,j) = 2^{-e(k,j)}`.
    pub fn e(&self, k: usize, j: u64) -> SymExp {
        let x = self.generation(k).n + j;
        match self.mode {
            Mode::TrueDobinski => SymExp { lin: x, pow: Some(x) },
            Mode::Tamed(c) => SymExp::int((1 + c) * x),
        }
    }

    /// `e(k-1, M_{k-1})`, the smallest length exponent of the previous generation (0 for `k = 1`).
    pub fn previous_min_exponent(&self, k: usize) -> SymExp {
        if k == 1 {
            SymExp::int(0)
        } else {
            self.e(k - 1, self.generation(k - 1).m)
        }
    }

    pub fn to_json(&self) -> serde_json::Value {
        let gens: Vec<_> = self
            .generations
            .iter()
            .map(|g| {
                let e: serde_json::Value = if g.enumerable {
                    json!((1..=g.m).map(|j| self.e(g.k, j).to_string()).collect::<Vec<_>>())
                } else {
                    json!({
                        "first": self.e(g.k, 1).to_string(),
                        "last": self.e(g.k, g.m).to_string(),
                        "formula": match self.mode {
                            Mode::TrueDobinski => "n+j+2^(n+j)".to_string(),
                            Mode::Tamed(c) => format!("{}*(n+j)", 1 + c),
                        },
                    })
                };
                json!({
                    "k": g.k,
                    "n_k": g.n.to_string(),
                    "M_k": g.m.to_string(),
                    "enumerable": g.enumerable,
                    "e": e,
                })
            })
            .collect();
        json!({ "mode": self.mode.to_string(), "generations": gens })
    }
}

/// Whether the separation condition `2^{-(n+M)} - A(k,1) >= (1/2) A(k,M)` holds.
///
/// With `a = n + M`, this is exactly `e(k,1) > a` and `e(k,M) + 1 > a`.
pub fn separation_holds(s: &WillowSchedule, k: usize) -> bool {
    let g = s.generation(k);
    let a = SymExp::int(g.n + g.m);
    let last = s.e(k, g.m);
    s.e(k, 1) > a && SymExp { lin: last.lin + 1, ..last } > a
}

/// Smallest-parameter schedule with `K` generations.
///
/// In true mode `M_k = 2^{e(k-1, M_{k-1})} + 1`, the least count with
/// `M_k A(k-1, M_{k-1}) > 1`; tamed mode keeps `M_k = M_1` so every
/// generation stays enumerable. For `k >= 2`, `n_k` is the least value with
/// `n_k >= n_{k-1} + M_{k-1}`, `n_k >= e(k-1, M_{k-1})` and the separation
/// condition.
pub fn plan_schedule(
    mode: Mode,
    generations: usize,
    n1: u64,
    m1: Option<u64>,
    limits: &Limits,
) -> Result<(WillowSchedule, ConstraintReport)> {
    if generations == 0 {
        return Err(Error::domain("a schedule needs at least one generation"));
    }
    let m1 = m1.unwrap_or(2);
    let mut s = WillowSchedule::custom(mode, &[(n1, m1)], limits)?;
    for k in 2..=generations {
        let prev = s.generation(k - 1).clone();
        let prev_e = s.e(k - 1, prev.m);
        let prev_e = prev_e.value().ok_or_else(|| Error::ExponentCap {
            exponent: prev_e.to_string(),
            cap: limits.exponent_cap,
        })?;
        let m = match mode {
            Mode::TrueDobinski => {
                if prev_e >= 64 {
                    return Err(Error::ExponentCap {
                        exponent: format!("2^{prev_e}+1 families"),
                        cap: limits.exponent_cap,
                    });
                }
                (1u64 << prev_e) + 1
            }
            Mode::Tamed(_) => m1,
        };
        let mut n = (prev.n + prev.m).max(prev_e);
        loop {
            s.push(k, n, m, limits)?;
            if separation_holds(&s, k) {
                break;
            }
            s.generations.pop();
            n += 1;
        }
    }
    let report = check_constraints(&s, limits)?;
    Ok((s, report))
}

/// One generation of the symbolic check of `g(j,k) >= c / h(A(k,j))` for `h = 1/log(1/x)`.
#[derive(Clone, Debug, PartialEq)]
pub struct HypothesisRow {
    pub k: usize,
    /// Smallest and largest `x = n_k + j` checked.
    pub x_min: u64,
    pub x_max: u64,
    pub holds: bool,
    /// Certified lower bound of `2^x - (ln 2/2)(e(k,j))` at the smallest `x`.
    pub margin: f64,
}

/// Checks `2^{n_k+j} >= (ln 2 / 2) e(k,j)` for every `(k, j)` with `n_k + j >= 4`.
///
/// The difference is increasing in `x = n_k + j` in both modes, so it is
/// certified at the smallest `x` of each generation.
pub fn frostman_hypothesis_check(s: &WillowSchedule) -> Vec<HypothesisRow> {
    const PREC: u64 = 96;
    s.generations
        .iter()
        .filter_map(|g| {
            let x_max = g.n + g.m;
            let x_min = (g.n + 1).max(4);
            if x_min > x_max {
                return None;
            }
            let e = s.e(g.k, x_min - g.n);
            let lhs = Real::from_int(BigUint::one() << x_min as usize);
            let rhs = Real::from_int(e.to_biguint()).mul(&ball::ln2(PREC), PREC).mul_pow2(-1);
            let diff = lhs.sub(&rhs, PREC);
            Some(HypothesisRow {
                k: g.k,
                x_min,
                x_max,
                holds: diff.is_positive(),
                margin: diff.to_f64_bounds().0,
            })
        })
        .collect()
}

/// Largest Frostman ratio `mu(L) / h(|L|)` over generation-`k` intervals, for
/// `h = 1/log(1/x)`, evaluated in exponent space for `k = 1..=K`.
///
/// Children of an interval of density `D = mu(J)/|J|` in family `j` carry mass
/// `D / (M_k 2^{n_k + j - [j > 1]})`. The ratio is decreasing in `j` beyond
/// `j = 2`, while the child density increases with `j`, so `j in {1, 2, M_k}`
/// suffice.
pub fn symbolic_generation_ratios(s: &WillowSchedule) -> Vec<f64> {
    let ln2_log2 = std::f64::consts::LN_2.log2();
    let mut density_log2 = 0.0f64;
    let mut out = Vec::new();
    for g in &s.generations {
        let log2_m = (g.m as f64).log2();
        let mut js = vec![1, 2.min(g.m), g.m];
        js.dedup();
        let mass = |j: u64| density_log2 - log2_m - (g.n + j) as f64 + if j > 1 { 1.0 } else { 0.0 };
        let best = js
            .iter()
            .map(|&j| mass(j) + s.e(g.k, j).log2() + ln2_log2)
            .fold(f64::NEG_INFINITY, f64::max);
        out.push(best.exp2());
        let e_last = s.e(g.k, g.m);
        density_log2 = mass(g.m) + e_last.value().map_or(f64::INFINITY, |v| v as f64);
    }
    out
}

/// `M_k` as a big integer, for reporting.
pub fn family_count(s: &WillowSchedule, k: usize) -> BigUint {
    BigUint::from(s.generation(k).m)
}

/// `log2 M_k`.
pub fn family_count_log2(s: &WillowSchedule, k: usize) -> f64 {
    s.generation(k).m.to_f64().unwrap_or(f64::INFINITY).log2()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sym_exp_order() {
        let a = SymExp { lin: 5, pow: Some(100) };
        let b = SymExp { lin: 1 << 40, pow: Some(99) };
        assert!(a > b);
        assert!(SymExp { lin: 3, pow: Some(4) } == SymExp::int(19) || SymExp { lin: 3, pow: Some(4) } > SymExp::int(18));
        assert_eq!(SymExp { lin: 3, pow: Some(4) }.cmp(&SymExp::int(19)), Ordering::Equal);
        assert!(SymExp { lin: 0, pow: Some(200) } > SymExp::int(u64::MAX));
        assert_eq!(SymExp { lin: 38, pow: Some(38) }.to_string(), "274877906982");
        assert_eq!(SymExp { lin: 7, pow: Some(70) }.to_string(), "7+2^70");
    }

    #[test]
    fn true_schedule() {
        let (s, _) = plan_schedule(Mode::TrueDobinski, 2, 3, Some(2), &Limits::default()).unwrap();
        assert_eq!(s.e(1, 1), SymExp::int(20));
        assert_eq!(s.e(1, 2), SymExp::int(37));
        let g2 = s.generation(2);
        assert_eq!(g2.m, (1 << 37) + 1);
        assert_eq!(g2.n, 37);
        assert!(s.generation(1).enumerable && !g2.enumerable);
        assert!(plan_schedule(Mode::TrueDobinski, 3, 3, Some(2), &Limits::default()).is_err());
    }

    #[test]
    fn tamed_schedule() {
        let (s, _) = plan_schedule(Mode::Tamed(2), 3, 3, Some(2), &Limits::default()).unwrap();
        let es: Vec<u64> = (1..=3).flat_map(|k| [s.e(k, 1), s.e(k, 2)]).map(|e| e.value().unwrap()).collect();
        assert_eq!(es, vec![12, 15, 48, 51, 156, 159]);
        assert_eq!(s.generations.iter().map(|g| g.n).collect::<Vec<_>>(), vec![3, 15, 51]);
        assert!(s.generations.iter().all(|g| g.enumerable));
    }

    #[test]
    fn hypothesis_rows() {
        let (s, _) = plan_schedule(Mode::TrueDobinski, 2, 3, Some(2), &Limits::default()).unwrap();
        let rows = frostman_hypothesis_check(&s);
        assert_eq!(rows.len(), 2);
        assert!(rows.iter().all(|r| r.holds));
        // 2^4 - (ln 2 / 2) * 20
        assert!((rows[0].margin - (16.0 - 10.0 * std::f64::consts::LN_2)).abs() < 1e-9);
    }

    #[test]
    fn symbolic_ratios_decrease() {
        let (s, _) = plan_schedule(Mode::TrueDobinski, 2, 3, Some(2), &Limits::default()).unwrap();
        let r = symbolic_generation_ratios(&s);
        assert!((r[0] - 37.0 * std::f64::consts::LN_2 / 32.0).abs() < 1e-12);
        assert!(r[1] <= r[0]);
    }
}
