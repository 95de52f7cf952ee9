use poincare_core::group::{distance, gromov_product, SparseGroupFunction};
use poincare_core::{GroupParams, RadialFunction, ResourceCaps, Word};
use proptest::prelude::*;

fn word(max: usize) -> impl Strategy<Value = Word> {
    prop::collection::vec(0u8..4, 0..=max).prop_map(|v| Word::reduce(&v))
}

fn sparse(max_len: usize) -> impl Strategy<Value = SparseGroupFunction> {
    prop::collection::vec((word(max_len), -2.0f64..2.0), 1..12).prop_map(SparseGroupFunction::from_entries)
}

/// (x, y)_e from distances only.
fn gromov_by_distance(x: &Word, y: &Word) -> f64 {
    (x.len() as f64 + y.len() as f64 - distance(x, y) as f64) / 2.0
}

proptest! {
    #[test]
    fn tree_is_zero_hyperbolic(x in word(8), y in word(8), z in word(8)) {
        let xy = gromov_product(&x, &y);
        prop_assert_eq!(xy as f64, gromov_by_distance(&x, &y));
        prop_assert!(xy >= gromov_product(&x, &z).min(gromov_product(&z, &y)));
    }

    #[test]
    fn distance_is_left_invariant(g in word(10), x in word(8), y in word(8)) {
        prop_assert_eq!(distance(&g.mul(&x), &g.mul(&y)), distance(&x, &y));
    }

    #[test]
    fn multiplication_is_associative_with_inverses(x in word(8), y in word(8), z in word(8)) {
        prop_assert_eq!(x.mul(&y).mul(&z), x.mul(&y.mul(&z)));
        prop_assert!(x.mul(&x.inverse()).is_identity());
        prop_assert!(x.mul(&y).is_reduced());
    }

    #[test]
    fn young_inequality(f in sparse(3), g in sparse(3)) {
        let fg = f.convolve(&g, 1 << 20).unwrap();
        prop_assert!(fg.l2_norm() <= f.l1_norm() * g.l2_norm() * (1.0 + 1e-12));
    }

    #[test]
    fn sphere_rank_is_a_bijection(w in word(9)) {
        let p = GroupParams::f2();
        prop_assert_eq!(p.sphere_unrank(w.len(), p.sphere_rank(&w)), w);
    }
}

#[test]
fn radial_convolution_matches_radialized_convolution() {
    let p = GroupParams::f2();
    let caps = ResourceCaps::default();
    for m in 0..=8usize {
        for n in 0..=8 - m {
            let (a, b) = (RadialFunction::sphere(m), RadialFunction::sphere(n));
            let fast = a.radial_convolve(&b, &p);
            let slow = a
                .embed(&p, &caps)
                .unwrap()
                .convolve(&b.embed(&p, &caps).unwrap(), 1 << 22)
                .unwrap()
                .radialize(&p);
            let len = fast.coeffs().len().max(slow.coeffs().len());
            for r in 0..len {
                let (x, y) = (
                    fast.coeffs().get(r).copied().unwrap_or(0.0),
                    slow.coeffs().get(r).copied().unwrap_or(0.0),
                );
                assert_eq!(x, y, "A_{m} * A_{n} at radius {r}");
            }
        }
    }
}
