use poincare_core::boundary::cylinder_mass;
use poincare_core::gns::{
    boundary_form, boundary_form_spectrum, conditional_expectation, knapp_stein_diagonal, knapp_stein_matrix,
    knapp_stein_relation_defect, knapp_stein_spectrum, nat_comp_deviation, pair_measure, sigma_schedule,
    PairMeasure, PairMeasureOptions,
};
use poincare_core::poincare::SlowGrowthTheta;
use poincare_core::posdef::PosDefOracle;
use poincare_core::{GroupParams, ResourceCaps, Word};
use proptest::prelude::*;

fn schedule(phi: &PosDefOracle, s: f64, depth: usize) -> Vec<PairMeasure> {
    sigma_schedule(s, 5)
        .into_iter()
        .map(|sigma| {
            pair_measure(phi, sigma, &SlowGrowthTheta::one(), depth, &PairMeasureOptions::default(), &ResourceCaps::default())
                .unwrap()
        })
        .collect()
}

fn strictly_decreasing(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[1] < w[0])
}

#[test]
fn boundary_blocks_are_positive() {
    let p = GroupParams::f2();
    for (phi, s) in [
        (PosDefOracle::haagerup_s(&p, 0.75).unwrap(), 0.75),
        (PosDefOracle::haagerup_s(&p, 0.9).unwrap(), 0.9),
        (PosDefOracle::trivial(&p), 1.0),
        (PosDefOracle::harish_chandra(&p, 0.8).unwrap(), 0.8),
    ] {
        for pm in schedule(&phi, s, 3) {
            let spec = boundary_form_spectrum(&pm);
            assert!(spec.relative_min >= -1e-8, "{} at σ = {}: {}", phi.name(), pm.sigma, spec.relative_min);
        }
    }
}

#[test]
fn natural_complementary_identification() {
    let p = GroupParams::f2();
    let s = 0.75;
    let phi = PosDefOracle::haagerup_s(&p, s).unwrap();
    let devs: Vec<f64> = schedule(&phi, s, 3)
        .iter()
        .map(|pm| nat_comp_deviation(pm, s, &ResourceCaps::default()).unwrap())
        .collect();
    println!("deviation from m_s: {devs:?}");
    assert!(strictly_decreasing(&devs), "{devs:?}");
}

#[test]
fn knapp_stein_relation_along_schedule() {
    let p = GroupParams::f2();
    let phi = PosDefOracle::haagerup_s(&p, 0.75).unwrap();
    let gens: Vec<Word> = (0..4u8).map(|c| Word::from_reduced(vec![c])).collect();
    let defects: Vec<f64> = schedule(&phi, 0.75, 4)
        .iter()
        .map(|pm| gens.iter().map(|g| knapp_stein_relation_defect(pm, g).unwrap()).fold(0.0, f64::max))
        .collect();
    println!("relation defects: {defects:?}");
    assert!(strictly_decreasing(&defects), "{defects:?}");
    assert!(*defects.last().unwrap() <= 0.2);
}

#[test]
fn conditional_expectation_is_a_symmetric_markov_kernel() {
    let p = GroupParams::f2();
    for pm in schedule(&PosDefOracle::haagerup_s(&p, 0.75).unwrap(), 0.75, 3) {
        let e = conditional_expectation(&pm).unwrap();
        assert!(e.max_row_sum_error() <= 1e-12);
        assert!(e.max_symmetry_error() <= 1e-12);
    }
}

#[test]
fn critical_trivial_form_factorizes() {
    let p = GroupParams::f2();
    let phi = PosDefOracle::trivial(&p);
    let depth = 3;
    let nu = cylinder_mass(&p, depth);
    for pm in schedule(&phi, 1.0, depth) {
        let n = pm.dim();
        let f1: Vec<f64> = (0..n).map(|i| ((i * 7 % 5) as f64) - 2.0).collect();
        let f2: Vec<f64> = (0..n).map(|i| ((i * 3 % 4) as f64) * 0.5).collect();
        let exact = f1.iter().sum::<f64>() * nu * f2.iter().sum::<f64>() * nu;
        assert!((boundary_form(&pm, &f1, &f2).unwrap() - exact).abs() <= 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn knapp_stein_forms_are_positive(s in 0.51f64..=1.0, depth in 2usize..=4) {
        let p = GroupParams::f2();
        let ks = knapp_stein_matrix(&p, s, depth, &ResourceCaps::default()).unwrap();
        let spec = knapp_stein_spectrum(&ks);
        prop_assert!(spec.relative_min >= -1e-8);
        let d = knapp_stein_diagonal(&p, s, depth);
        prop_assert!(d > 0.0 && d.is_finite());
    }
}
