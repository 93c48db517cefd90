mod common;

use common::{q, sweep_measure, to_family};
use dobinski::expansion::{DigitProgram, Distance, RunLength};
use dobinski::gauge::{critical_exponent, CriticalExponent, GaugeSpec};
use dobinski::identity::{bell_number, bell_numbers, BellMode, BellValue};
use dobinski::limsup::{Limits, PhiSpec};
use dobinski::numerics::pow2;
use dobinski::willow::{frostman_measure, plan_schedule, MeasureTree, Mode};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive, Zero};
use proptest::prelude::*;
use std::sync::OnceLock;

fn tamed_tree() -> &'static MeasureTree {
    static TREE: OnceLock<MeasureTree> = OnceLock::new();
    TREE.get_or_init(|| {
        let s = plan_schedule(Mode::Tamed(2), 3, 3, Some(2), &Limits::default()).unwrap().0;
        frostman_measure(&s, 3).unwrap()
    })
}

fn ball() -> impl Strategy<Value = (BigRational, BigRational)> {
    (0u32..=10, any::<u64>(), 1u32..=12, any::<u64>(), any::<bool>()).prop_map(|(a, k, b, r, pow)| {
        let c = BigRational::new(BigInt::from(k % ((1u64 << a) + 1)), BigInt::from(1u64 << a));
        let rad = if pow {
            pow2(-(b as i64))
        } else {
            let den = 1u64 << (b + 1);
            BigRational::new(BigInt::from(1 + r % (den / 2 - 1).max(1)), BigInt::from(den))
        };
        (c, rad)
    })
}

fn bits(max: usize) -> impl Strategy<Value = Vec<u8>> {
    prop::collection::vec(0u8..=1, 0..max)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn union_measure_matches_sweep(balls in prop::collection::vec(ball(), 0..20)) {
        let m = to_family(&balls).exact_measure().unwrap();
        prop_assert_eq!(m.exact(), Some(&sweep_measure(&balls)));
    }

    #[test]
    fn union_measure_is_monotone(balls in prop::collection::vec(ball(), 1..12)) {
        let all = to_family(&balls).exact_measure().unwrap();
        let fewer = to_family(&balls[1..]).exact_measure().unwrap();
        prop_assert!(fewer.exact() <= all.exact());
        prop_assert!(all.exact().unwrap() <= &q(1, 1));
    }

    #[test]
    fn nearest_dyadic_sandwich(prefix in bits(6), period in bits(7), n in 1u64..40) {
        prop_assume!(period.iter().any(|&b| b == 1) && period.iter().any(|&b| b == 0));
        let p = DigitProgram::periodic(prefix, period).unwrap();
        let z = match p.run_length(n) {
            RunLength::Finite(l) => l.to_u64().unwrap(),
            RunLength::Unbounded => unreachable!("non-constant period"),
        };
        let d = match p.nearest_dyadic(n).distance {
            Distance::Exact(d) => d,
            other => panic!("periodic distances are exact: {other:?}"),
        };
        let x = p.value().unwrap();
        prop_assert_eq!(&(&x - p.nearest_dyadic(n).point.to_rational()).abs(), &d);
        prop_assert!(pow2(-((n + z + 1) as i64)) <= d);
        prop_assert!(d <= pow2(-((n + z) as i64)));
    }

    #[test]
    fn shift_is_the_doubling_map(prefix in bits(6), period in bits(6), n in 0u64..20) {
        prop_assume!(!period.is_empty());
        let p = DigitProgram::periodic(prefix, period).unwrap();
        let x = p.value().unwrap();
        let scaled = &x * BigRational::from_integer(BigInt::from(1u64) << n as usize);
        let frac = &scaled - scaled.floor();
        let shifted = p.shift(n).value().unwrap();
        // 0.111... = 1 and 0 denote the same fractional part.
        prop_assert!(shifted == frac || (shifted == q(1, 1) && frac.is_zero()));
    }

    #[test]
    fn power_decay_critical_exponent(num in 1i64..20, den in 1i64..20) {
        let alpha = q(num, den);
        let crit = critical_exponent(&PhiSpec::PowerDecay(alpha.clone()), &GaugeSpec::Power(q(1, 1))).unwrap();
        prop_assert_eq!(crit, CriticalExponent::Value(q(1, 1) / (q(1, 1) + alpha)));
    }

    #[test]
    fn measure_is_additive(cut in prop::collection::vec(any::<u64>(), 3)) {
        let t = tamed_tree();
        let mut pts: Vec<BigRational> = cut
            .iter()
            .map(|c| BigRational::new(BigInt::from(*c), BigInt::from(u64::MAX)))
            .collect();
        pts.sort();
        let left = t.measure(&pts[0], &pts[1]);
        let right = t.measure(&pts[1], &pts[2]);
        prop_assert_eq!(left + right, t.measure(&pts[0], &pts[2]));
    }
}

#[test]
fn tree_conserves_mass_and_nests() {
    let t = tamed_tree();
    for k in 1..=t.depth() {
        let parents = &t.by_generation[k - 1];
        let starts: Vec<BigRational> = parents.iter().map(|&p| t.nodes[p].lo()).collect();
        for w in parents.windows(2) {
            assert!(t.nodes[w[0]].hi() < t.nodes[w[1]].lo(), "generation {} overlaps", k - 1);
        }
        for &i in &t.by_generation[k] {
            let node = &t.nodes[i];
            // Parents are disjoint, so only the last one starting at or before the node can hold it.
            let at = starts.partition_point(|s| s <= &node.lo());
            assert!(at > 0);
            let p = parents[at - 1];
            assert!(node.hi() <= t.nodes[p].hi(), "node {i} sticks out of its progenitor");
            assert_eq!(node.parent, Some(p));
        }
    }
    for n in &t.nodes {
        assert!(n.weight > BigRational::zero());
        if !n.children.is_empty() {
            let sum: BigRational = n.children.iter().map(|&c| t.nodes[c].weight.clone()).sum();
            assert_eq!(sum, n.weight);
        }
    }
}

#[test]
fn bell_series_brackets_recurrence() {
    let exact = bell_numbers(20);
    for n in 0..=20u64 {
        match bell_number(n, BellMode::Series(n.max(30)), 25).unwrap() {
            BellValue::Series { value, truncation } => {
                let b = BigRational::from_integer(BigInt::from(exact[n as usize].clone()));
                assert!(value.lower() <= b, "n={n}");
                assert!(b <= value.upper() + truncation, "n={n}");
            }
            BellValue::Exact(_) => unreachable!(),
        }
    }
}
