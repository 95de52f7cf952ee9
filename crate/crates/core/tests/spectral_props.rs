use poincare_core::poincare::critical_exponent;
use poincare_core::posdef::{hc_closed_form, PosDefOracle};
use poincare_core::spectral::{entropy_estimate, regular_norm, rep_norm_lower, GroupFn};
use poincare_core::{GroupParams, RadialFunction, ResourceCaps, SparseGroupFunction, Word};
use proptest::prelude::*;

/// ‖λ(f)‖ for radial f ≥ 0: pairing with the spherical function at the
/// bottom of the tempered line.
fn plancherel_norm(p: &GroupParams, f: &RadialFunction) -> f64 {
    f.coeffs()
        .iter()
        .enumerate()
        .map(|(m, c)| c * p.sphere_size_f64(m) * hc_closed_form(p, 0.5, m))
        .sum()
}

fn profile() -> impl Strategy<Value = RadialFunction> {
    prop::collection::vec(0.0f64..1.0, 1..=4).prop_map(|mut v| {
        v[0] += 0.1;
        RadialFunction::new(v)
    })
}

#[test]
fn kesten_and_plancherel_agree() {
    let p = GroupParams::f2();
    let c1 = RadialFunction::sphere(1);
    assert!((plancherel_norm(&p, &c1) - 2.0 * 3f64.sqrt()).abs() < 1e-12);
}

#[test]
fn dirac_exponent_is_below_half() {
    let p = GroupParams::f2();
    let est = critical_exponent(&PosDefOracle::dirac(&p), (4, 12)).unwrap();
    assert!(est.s_hat <= 0.5);
}

#[test]
fn entropy_respects_weak_containment_order() {
    let p = GroupParams::f2();
    let caps = ResourceCaps::default();
    let d = entropy_estimate(&PosDefOracle::dirac(&p), (1, 12), 256, &caps).unwrap();
    let h = entropy_estimate(&PosDefOracle::haagerup_s(&p, 0.75).unwrap(), (1, 12), 256, &caps).unwrap();
    assert!(d.h_lower >= h.h_lower, "{} vs {}", d.h_lower, h.h_lower);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn regular_norm_brackets_the_plancherel_value(f in profile()) {
        let p = GroupParams::f2();
        let exact = plancherel_norm(&p, &f);
        let est = regular_norm(&p, &GroupFn::Radial(f.clone()), 1024, &ResourceCaps::default()).unwrap();
        prop_assert!(est.monotone);
        prop_assert!(est.lower <= exact * (1.0 + 1e-12), "{} > {}", est.lower, exact);
        prop_assert!(exact <= est.certified_upper * (1.0 + 1e-12));
        prop_assert!(est.certified_upper <= f.l1_norm(&p) * (1.0 + 1e-12));
        prop_assert!(f.l2_norm(&p) <= est.lower * (1.0 + 1e-12));
        prop_assert!((est.value - exact).abs() <= 0.02 * exact, "{} vs {}", est.value, exact);
    }

    #[test]
    fn positive_functions_never_shrink_in_positive_representations(f in profile(), t in 0.1f64..2.0) {
        let p = GroupParams::f2();
        let caps = ResourceCaps::default();
        let g = GroupFn::Radial(f.clone());
        let reg = regular_norm(&p, &g, 256, &caps).unwrap();
        let probes = vec![SparseGroupFunction::dirac(Word::identity())];
        for phi in [PosDefOracle::trivial(&p), PosDefOracle::haagerup(&p, t).unwrap()] {
            let lo = rep_norm_lower(&phi, &g, 256, &probes, &caps).unwrap().estimate;
            let floor = reg.value - reg.uncertainty - lo.uncertainty;
            prop_assert!(lo.lower >= floor, "{}: {} vs {}", phi.name(), lo.lower, reg.value);
        }
    }
}
