#![allow(dead_code)]

use dobinski::numerics::{Dyadic, Interval, IntervalFamily, Radius};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub fn q(a: i64, b: i64) -> BigRational {
    BigRational::new(a.into(), b.into())
}

pub fn pow2_neg(k: u64) -> BigRational {
    BigRational::new(BigInt::one(), BigInt::one() << k as usize)
}

/// A family of at most 20 balls with dyadic centers and exact dyadic radii.
pub fn random_family(rng: &mut ChaCha8Rng) -> Vec<(BigRational, BigRational)> {
    let n = rng.gen_range(0..=20);
    (0..n)
        .map(|_| {
            let a: u64 = rng.gen_range(0..=10);
            let c = BigRational::new(rng.gen_range(0..=(1i64 << a)).into(), (BigInt::one() << a as usize).clone());
            let r = if rng.gen_bool(0.5) {
                pow2_neg(rng.gen_range(1..=12))
            } else {
                let b: u64 = rng.gen_range(2..=12);
                BigRational::new(rng.gen_range(1..(1i64 << (b - 1))).into(), BigInt::one() << b as usize)
            };
            (c, r)
        })
        .collect()
}

pub fn to_family(balls: &[(BigRational, BigRational)]) -> IntervalFamily {
    IntervalFamily::new(
        balls
            .iter()
            .map(|(c, r)| {
                let d = Dyadic::from_rational(c).expect("dyadic center");
                let radius = match Dyadic::from_rational(r) {
                    Some(rd) if rd.numerator() == &BigInt::one() => {
                        Radius::Pow2(dobinski::numerics::ScaleExponent::from_int(rd.exponent()))
                    }
                    _ => Radius::Rational(r.clone()),
                };
                Interval::new(d, radius).unwrap()
            })
            .collect(),
    )
}

/// Union length inside `[0, 1]` by sweeping every endpoint and testing each
/// elementary segment's midpoint against every ball.
pub fn sweep_measure(balls: &[(BigRational, BigRational)]) -> BigRational {
    let clamp = |x: BigRational| x.max(BigRational::zero()).min(BigRational::one());
    let mut pts: Vec<BigRational> = vec![BigRational::zero(), BigRational::one()];
    for (c, r) in balls {
        pts.push(clamp(c - r));
        pts.push(clamp(c + r));
    }
    pts.sort();
    pts.dedup();
    let two = BigRational::from_integer(2.into());
    let mut total = BigRational::zero();
    for w in pts.windows(2) {
        let mid = (&w[0] + &w[1]) / &two;
        if balls.iter().any(|(c, r)| (&mid - c).abs() < *r) {
            total += &w[1] - &w[0];
        }
    }
    total
}
