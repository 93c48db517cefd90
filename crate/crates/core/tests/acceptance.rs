//! Acceptance gate: one PASS/FAIL line per criterion.
//!
//! Criterion 1 asks for the stage-20 partial product at x = 1/3 to be within
//! 1e-6 of 3. That stage equals 3^{1 - 2^-21} exactly, which is 1.571e-6
//! below 3, so the line stays red; the test pins the gap to that value.
//!
//! Criterion 8 asks for the tamed three-generation schedule to pass every
//! constraint, but a schedule that keeps the family count fixed cannot meet
//! the growth condition `M_k A(k-1, M_{k-1}) > 1`, and one that meets it is
//! not enumerable. It is evaluated as stated and expected to stay red; any
//! other outcome of it, or any other red line, fails the test.

mod common;

use std::time::{Duration, Instant};

use common::{q, random_family, sweep_measure, to_family};
use dobinski::expansion::{DigitProgram, Limsup, RunLength, Verdict};
use dobinski::gauge::{
    critical_exponent, dim_fit, grid_box_count_log2, jarnik_critical_exponent, khintchine_series, series_classify,
    single_scale_ratio, box_count, BoxSample, Certificate, Convergence, CriticalExponent, FitMode, GaugeSpec, PsiSpec,
};
use dobinski::identity::{bell_number, bell_numbers, partial_product, tail_factor_bound, BellMode, BellValue};
use dobinski::limsup::{borel_cantelli_tail, quasi_independence_audit, stage_family, Limits, OmegaSpec, PhiSpec, SetSpec};
use dobinski::numerics::pow2;
use dobinski::willow::{
    frostman_audit, frostman_hypothesis_check, frostman_measure, plan_schedule, Constraint, Mode, Status,
};
use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const KNOWN_RED: &[u32] = &[1, 8];

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn ln2() -> f64 {
    std::f64::consts::LN_2
}

/// `3 - 3^{1 - 2^{-21}}`, the exact distance of stage 20 from the limit.
fn stage_20_gap() -> f64 {
    -3.0 * (-(3f64.ln()) * (-21f64).exp2()).exp_m1()
}

fn c1_convergent_identity() -> Outcome {
    let x: DigitProgram = "periodic:;01".parse().unwrap();
    let start = Instant::now();
    let t = partial_product(&x, 20, 30).unwrap();
    let elapsed = start.elapsed();
    let err = (t.partial.to_f64() - 3.0).abs();
    // Per-factor product with exact orbit points 2^j/3 mod 1.
    let mut worst = 0.0f64;
    for n in 0..=12u64 {
        let mut prod = 1.0f64;
        for j in 0..=n {
            let frac = if j % 2 == 0 { 1.0 / 3.0 } else { 2.0 / 3.0 };
            prod *= (std::f64::consts::PI * frac).tan().abs().powf((-(j as f64)).exp2());
        }
        let closed = partial_product(&x, n, 20).unwrap().partial.to_f64();
        worst = worst.max((closed - prod).abs());
    }
    outcome(
        err < 1e-6 && elapsed < Duration::from_secs(1) && worst < 1e-12,
        format!("|P_20 - 3| = {err:.2e} in {elapsed:?}; closed vs per-factor max {worst:.2e}"),
    )
}

fn c2_divergent_identity() -> Outcome {
    let x: DigitProgram = "schedule:fill=0;geom(n1=1,ratio=2,k=1,digit=0)".parse().unwrap();
    // Scheduled stages: the run after position n + 1 has length 2^{n+1}.
    let stages: Vec<u64> = (0..=64u64)
        .filter(|&n| match x.run_length(n + 1) {
            RunLength::Finite(l) => l >= BigUint::one() << (n + 1) as usize,
            RunLength::Unbounded => true,
        })
        .collect();
    let bounds: Vec<f64> = stages.iter().map(|&n| tail_factor_bound(&x, n).upper).collect();
    let m = x.classify_membership();
    let ok = !stages.is_empty()
        && bounds.iter().all(|b| *b <= 0.9)
        && m.verdict == Verdict::InD(1)
        && m.limsup == Limsup::Exact(BigRational::one());
    outcome(ok, format!("stages {stages:?} bounds {bounds:.3?}; {:?} limsup {:?}", m.verdict, m.limsup))
}

fn c3_series_dichotomy() -> Outcome {
    let start = Instant::now();
    let mut ok = true;
    let mut notes = Vec::new();
    for k in 1..=3u64 {
        let v = series_classify(&PhiSpec::DoubleExp(k), &GaugeSpec::LogPower(q(1, 1)), 30).unwrap();
        let expect = k as f64 / ln2();
        let constant = matches!(&v.certificate, Certificate::ConstantTerm { value } if (value.to_f64() - expect).abs() < 1e-12);
        // 2^n h(2^{-2^n/k}) = 2^n / ((2^n / k) ln 2)
        let terms_ok = v.trace.len() == 30
            && v.trace.iter().all(|t| {
                let oracle = (t.n as f64).exp2() / ((t.n as f64).exp2() / k as f64 * ln2());
                (t.term - oracle).abs() < 1e-12
            });
        ok &= v.verdict == Convergence::Diverges && constant && terms_ok;
        for s in [q(3, 2), q(2, 1)] {
            let v = series_classify(&PhiSpec::DoubleExp(k), &GaugeSpec::LogPower(s), 30).unwrap();
            ok &= v.verdict == Convergence::Converges;
        }
        notes.push(format!("k={k}: {expect:.12}"));
    }
    let elapsed = start.elapsed();
    ok &= elapsed < Duration::from_secs(1);
    outcome(ok, format!("constants {}; {elapsed:?}", notes.join(", ")))
}

fn c4_power_decay_dimension() -> Outcome {
    let mut ok = true;
    let mut notes = Vec::new();
    let delta = q(1, 1000);
    for alpha in 1..=3i64 {
        let crit = q(1, 1 + alpha);
        let phi = PhiSpec::PowerDecay(q(alpha, 1));
        ok &= critical_exponent(&phi, &GaugeSpec::Power(q(1, 1))).unwrap() == CriticalExponent::Value(crit.clone());
        let at = |s: BigRational| series_classify(&phi, &GaugeSpec::Power(s), 40).unwrap().verdict;
        ok &= at(&crit - &delta) == Convergence::Diverges;
        ok &= at(crit.clone()) == Convergence::Diverges;
        ok &= at(&crit + &delta) == Convergence::Converges;
        let n = 10u64;
        let m = n * (1 + alpha as u64);
        let f = stage_family(&SetSpec::BPhi(phi.clone()), n, &Limits::default()).unwrap();
        let count = box_count(&f, m, 1 << 20).unwrap();
        let (_, exact) = single_scale_ratio(&count, m);
        let exact = exact.expect("power-of-two count");
        ok &= (&exact - &crit).abs() <= q(1, 20);
        notes.push(format!("alpha={alpha}: N={count}, ratio {exact}"));
    }
    outcome(ok, notes.join("; "))
}

fn c5_logarithmic_dimension() -> Outcome {
    let mut ok = true;
    let mut notes = Vec::new();
    // Exponent-space counts agree with enumeration where enumeration is possible.
    let f = stage_family(&SetSpec::RunAtLeastExp(q(1, 1)), 4, &Limits::default()).unwrap();
    let direct = box_count(&f, 20, 1 << 20).unwrap();
    ok &= direct == BigUint::one() << grid_box_count_log2(4, 20, 20).unwrap() as usize;
    for alpha in 1..=2u64 {
        let samples: Vec<BoxSample> = (4..=14u64)
            .map(|n| {
                let m = n + (1u64 << (n * alpha));
                BoxSample {
                    m,
                    log2_count: grid_box_count_log2(n, m, m).unwrap() as f64,
                }
            })
            .collect();
        let fit = dim_fit(&samples, FitMode::Logarithmic).unwrap();
        let target = 1.0 / alpha as f64;
        ok &= (fit.slope - target).abs() <= 0.1;
        let sym = critical_exponent(&PhiSpec::TowerDecay(q(alpha as i64, 1)), &GaugeSpec::LogPower(q(1, 1))).unwrap();
        ok &= sym == CriticalExponent::Value(q(1, alpha as i64));
        notes.push(format!("alpha={alpha}: slope {:.4}, critical {sym}", fit.slope));
    }
    outcome(ok, notes.join("; "))
}

fn c6_quasi_independence() -> Outcome {
    let start = Instant::now();
    let a = quasi_independence_audit(&OmegaSpec::Constant(q(1, 4)), 12, &Limits::default()).unwrap();
    let elapsed = start.elapsed();
    let first = a.pairs.iter().find(|p| (p.n, p.m) == (1, 2)).unwrap();
    let halves = a.pairs.iter().all(|p| p.measure_n == q(1, 2) && p.measure_m == q(1, 2));
    let ok = a.pairs.len() == 66
        && a.max_ratio <= q(2, 1)
        && first.ratio == BigRational::one()
        && halves
        && elapsed < Duration::from_secs(10);
    outcome(ok, format!("max ratio {} at {:?}, pair (1,2) = {}, {elapsed:?}", a.max_ratio, a.argmax, first.ratio))
}

fn c7_borel_cantelli() -> Outcome {
    let t = borel_cantelli_tail(1, 6, 12, &Limits::default()).unwrap();
    let ok = t.total < pow2(-50);
    outcome(ok, format!("log2 total = {:.2}", dobinski::numerics::log2_rational(&t.total)))
}

fn c8_willow() -> (Outcome, Vec<(&'static str, bool)>) {
    let lim = Limits::default();
    let (true_s, true_r) = plan_schedule(Mode::TrueDobinski, 2, 3, Some(2), &lim).unwrap();
    let g2 = true_s.generation(2);
    let symbolic = [Constraint::B, Constraint::C]
        .iter()
        .all(|c| matches!(true_r.status(*c, 2), Some(Status::SymbolicPass(_))));
    let part_true = true_r.all_pass() && !g2.enumerable && g2.m == (1u64 << 37) + 1 && symbolic;

    let (tamed, tamed_r) = plan_schedule(Mode::Tamed(2), 3, 3, Some(2), &lim).unwrap();
    let enumerated = (1..=3).all(|k| {
        [Constraint::B, Constraint::C, Constraint::D]
            .iter()
            .all(|c| matches!(tamed_r.status(*c, k), Some(Status::Pass(_))))
    });
    let part_tamed = tamed_r.all_pass() && enumerated;
    let tamed_failures: Vec<String> = tamed_r
        .failures()
        .map(|f| format!("({}) k={}", f.constraint, f.k))
        .collect();

    let tree = frostman_measure(&tamed, 3).unwrap();
    let part_conservation = tree.root().weight == BigRational::one()
        && tree.nodes.iter().all(|n| {
            n.weight > BigRational::from_integer(0.into())
                && (n.children.is_empty()
                    || n.children.iter().map(|&c| tree.nodes[c].weight.clone()).sum::<BigRational>() == n.weight)
        });

    let h = GaugeSpec::LogPower(q(1, 1));
    let small = frostman_audit(&tree, &h, 1_000, 2024).unwrap();
    let large = frostman_audit(&tree, &h, 10_000, 2024).unwrap();
    let drift = (large.max_ratio - small.max_ratio).abs() / small.max_ratio;
    let part_audit = drift < 0.05 && small.max_ratio.is_finite() && small.max_ratio > 0.0;

    let parts = vec![
        ("true-mode symbolic", part_true),
        ("tamed enumeration", part_tamed),
        ("conservation", part_conservation),
        ("audit stability", part_audit),
    ];
    let ok = parts.iter().all(|(_, p)| *p);
    let detail = format!(
        "{}; tamed failures {:?}; audit max {:.6} -> {:.6}",
        parts
            .iter()
            .map(|(n, p)| format!("{n} {}", if *p { "ok" } else { "red" }))
            .collect::<Vec<_>>()
            .join(", "),
        tamed_failures,
        small.max_ratio,
        large.max_ratio
    );
    (outcome(ok, detail), parts)
}

fn c9_frostman_hypothesis() -> Outcome {
    let (s, _) = plan_schedule(Mode::TrueDobinski, 2, 3, Some(2), &Limits::default()).unwrap();
    let rows = frostman_hypothesis_check(&s);
    let covers = s.generations.iter().all(|g| {
        rows.iter()
            .any(|r| r.k == g.k && r.x_min == (g.n + 1).max(4) && r.x_max == g.n + g.m)
    });
    // Independent float check at the smallest x of each generation.
    let direct = s.generations.iter().all(|g| {
        let x = ((g.n + 1).max(4)) as f64;
        x.exp2() >= ln2() / 2.0 * (x + x.exp2())
    });
    let ok = covers && direct && rows.iter().all(|r| r.holds);
    outcome(ok, format!("{} generations, smallest margin {:.3}", rows.len(), rows[0].margin))
}

fn c10_bell() -> Outcome {
    let b = bell_numbers(15);
    let head: Vec<u64> = b[..5].iter().map(|v| v.to_u64().unwrap()).collect();
    let mut ok = head == vec![1, 1, 2, 5, 15];
    let mut worst = 0.0f64;
    for n in 0..=15u64 {
        let exact = b[n as usize].to_f64().unwrap();
        match bell_number(n, BellMode::Series(40), 20).unwrap() {
            BellValue::Series { value, .. } => {
                let rel = (value.to_f64() - exact).abs() / exact;
                worst = worst.max(rel);
            }
            BellValue::Exact(_) => ok = false,
        }
    }
    ok &= worst < 1e-9;
    outcome(ok, format!("B_0..B_4 = {head:?}; worst relative error {worst:.2e}"))
}

fn c11_jarnik_khintchine() -> Outcome {
    let crit = jarnik_critical_exponent(&PsiSpec::PowerDecay(q(3, 1)), &GaugeSpec::Power(q(1, 1)));
    let k = khintchine_series(&PsiSpec::PowerDecay(q(2, 1)), 100).unwrap();
    let ok = crit == CriticalExponent::Value(q(1, 2)) && k.verdict == Convergence::Converges;
    outcome(ok, format!("critical s = {crit}; Khintchine q^-2 {}", k.verdict))
}

fn c12_measure_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let mut mismatches = 0;
    for _ in 0..1000 {
        let balls = random_family(&mut rng);
        let m = to_family(&balls).exact_measure().unwrap();
        if m.exact() != Some(&sweep_measure(&balls)) {
            mismatches += 1;
        }
    }
    outcome(mismatches == 0, format!("{mismatches} mismatches in 1000 families"))
}

#[test]
fn acceptance() {
    let (c8, c8_parts) = c8_willow();
    let results: Vec<(u32, Outcome)> = vec![
        (1, c1_convergent_identity()),
        (2, c2_divergent_identity()),
        (3, c3_series_dichotomy()),
        (4, c4_power_decay_dimension()),
        (5, c5_logarithmic_dimension()),
        (6, c6_quasi_independence()),
        (7, c7_borel_cantelli()),
        (8, c8),
        (9, c9_frostman_hypothesis()),
        (10, c10_bell()),
        (11, c11_jarnik_khintchine()),
        (12, c12_measure_oracle()),
    ];
    for (id, o) in &results {
        let tag = if o.pass { "PASS" } else { "FAIL" };
        println!("{tag} criterion {id}: {}", o.detail);
    }
    for (id, o) in &results {
        if KNOWN_RED.contains(id) {
            continue;
        }
        assert!(o.pass, "criterion {id} failed: {}", o.detail);
    }
    let x: DigitProgram = "periodic:;01".parse().unwrap();
    let gap = 3.0 - partial_product(&x, 20, 30).unwrap().partial.to_f64();
    assert!((gap - stage_20_gap()).abs() < 1e-15, "criterion 1 gap {gap}");
    // Criterion 8 is red only through the tamed growth condition.
    for (name, ok) in &c8_parts {
        assert_eq!(*ok, *name != "tamed enumeration", "criterion 8 part {name}");
    }
}
