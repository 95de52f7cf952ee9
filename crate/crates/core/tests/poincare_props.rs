use poincare_core::group::enumerate_sphere;
use poincare_core::poincare::{critical_exponent, exponent_from_log_sums, poincare_series};
use poincare_core::posdef::{make_oracle, PosDefOracle};
use poincare_core::{GroupParams, ResourceCaps, SparseGroupFunction, Word};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const SHIPPED: [&str; 6] = ["trivial", "dirac", "cyclic:a", "kernel:b:3", "haagerup-s:0.75", "hc:0.6"];

fn oracle(spec: &str) -> PosDefOracle {
    make_oracle(&GroupParams::f2(), spec, &ResourceCaps::default()).unwrap()
}

/// log Σ_{|g|=m} F(g) by brute force over the sphere.
fn log_sphere_sum_by_enumeration(m: usize, f: impl Fn(&Word) -> f64) -> f64 {
    let p = GroupParams::f2();
    enumerate_sphere(&p, m, &ResourceCaps::default()).unwrap().map(|g| f(&g)).sum::<f64>().ln()
}

#[test]
fn harish_chandra_estimates_converge_on_later_windows() {
    let phi = oracle("hc:0.6");
    let errs: Vec<f64> = [(4, 12), (8, 24), (16, 48), (32, 96)]
        .iter()
        .map(|&w| (critical_exponent(&phi, w).unwrap().s_hat - 0.6).abs())
        .collect();
    assert!(errs.windows(2).all(|w| w[1] < w[0] / 4.0), "{errs:?}");
    assert!(errs[3] < 1e-5);
}

#[test]
fn squaring_does_not_raise_the_exponent() {
    let w = (4, 10);
    for spec in SHIPPED {
        let phi = oracle(spec);
        let sums: Vec<f64> = (w.0..=w.1).map(|m| log_sphere_sum_by_enumeration(m, |g| phi.eval(g).powi(2))).collect();
        let sq = exponent_from_log_sums(&GroupParams::f2(), w, sums);
        let base = critical_exponent(&phi, w).unwrap();
        match sq {
            Ok(sq) => assert!(sq.s_hat <= base.s_hat + 2.0 * base.stderr.max(sq.stderr) + 1e-12, "{spec}"),
            // φ² vanishes on the whole window only when φ does.
            Err(_) => assert!(base.finite_support, "{spec}"),
        }
    }
}

/// Σ_{|g|=m} (h1 * φ * h2)(g), expanded over the supports of h1 and h2.
fn dressed_sphere_sum(phi: &PosDefOracle, h1: &SparseGroupFunction, h2: &SparseGroupFunction, m: usize) -> f64 {
    let p = GroupParams::f2();
    let sphere: Vec<Word> = enumerate_sphere(&p, m, &ResourceCaps::default()).unwrap().collect();
    let mut total = 0.0;
    for (x, a) in h1.iter() {
        for (y, b) in h2.iter() {
            let (xi, yi) = (x.inverse(), y.inverse());
            let s: f64 = sphere.iter().map(|g| phi.eval(&xi.mul(g).mul(&yi))).sum();
            total += a * b * s;
        }
    }
    total
}

fn random_positive(rng: &mut ChaCha8Rng) -> SparseGroupFunction {
    let p = GroupParams::f2();
    let ball = poincare_core::group::enumerate_ball(&p, 2, &ResourceCaps::default()).unwrap();
    let mut f = SparseGroupFunction::from_entries(ball.into_iter().filter_map(|w| {
        let keep = rng.gen_bool(0.3);
        let v = 1.0 - rng.gen::<f64>();
        keep.then_some((w, v))
    }));
    if f.is_empty() {
        f.set(Word::identity(), 1.0);
    }
    f
}

#[test]
fn dressing_by_positive_functions_keeps_the_exponent() {
    let w = (4, 9);
    let mut rng = ChaCha8Rng::seed_from_u64(51);
    for spec in ["trivial", "haagerup-s:0.75", "hc:0.6", "hc:0.9", "cyclic:a"] {
        let phi = oracle(spec);
        let base = critical_exponent(&phi, w).unwrap();
        for _ in 0..2 {
            let (h1, h2) = (random_positive(&mut rng), random_positive(&mut rng));
            let sums: Vec<f64> = (w.0..=w.1).map(|m| dressed_sphere_sum(&phi, &h1, &h2, m).ln()).collect();
            let est = exponent_from_log_sums(&GroupParams::f2(), w, sums).unwrap();
            let tol = 3.0 * base.stderr.max(est.stderr);
            println!("{spec}: {} vs {} (tol {tol})", est.s_hat, base.s_hat);
            assert!((est.s_hat - base.s_hat).abs() <= tol + 1e-12, "{spec}: {} vs {}", est.s_hat, base.s_hat);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn partial_sums_grow_with_truncation(idx in 0usize..6, sigma in 1.05f64..3.0, m1 in 1usize..60, extra in 1usize..60) {
        let phi = oracle(SHIPPED[idx]);
        let a = poincare_series(&phi, sigma, m1);
        let b = poincare_series(&phi, sigma, m1 + extra);
        if let (Ok(a), Ok(b)) = (a, b) {
            prop_assert!(b.partial >= a.partial);
            if a.tail_bound.is_finite() {
                prop_assert!(b.partial <= a.partial + a.tail_bound * (1.0 + 1e-12) + 1e-15);
            }
        }
    }
}
