use proptest::prelude::*;
use qsphere_core::gns::*;
use qsphere_core::random::{random_element, random_sphere, rng};
use qsphere_core::uq_actions::{Actions, Label};
use qsphere_core::{Exact, Field, SuQ2};

fn setup() -> Actions<Exact> {
    Actions::new(SuQ2::new(Exact::from_ratio(1, 2)))
}

#[test]
fn inner_product_examples() {
    let s = SuQ2::new(Exact::from_ratio(1, 2));
    let f = s.field();
    assert_eq!(s.haar_inner(&s.one(), &s.one()), f.one());
    assert_eq!(s.haar_inner(&s.a(), &s.b()), f.zero());
}

#[test]
fn adjoint_pattern_up_to_level_five() {
    let t = setup();
    for m in 0..=5 {
        let basis = build_fuzzy_basis(t.alg(), m, Ordering::SpinAscending).unwrap();
        assert_eq!(adjoint_pattern_residuals(&t, &basis), (0.0, 0.0), "level {m}");
    }
}

#[test]
fn delta1_kills_spin_zero() {
    let t = setup();
    let basis = build_fuzzy_basis(t.alg(), 3, Ordering::SpinAscending).unwrap();
    let k = operator_matrix(&t, &basis, Label::Delta1);
    assert!((0..basis.len()).all(|i| t.alg().field().is_zero(k.get(i, 0))));
}

#[test]
fn pn_commutation() {
    let t = setup();
    let b3 = build_fuzzy_basis(t.alg(), 3, Ordering::SpinAscending).unwrap();
    assert_eq!(pn_commutation_residual(&t, &b3, Label::Delta1, 1), 0.0);
    let b2 = b3.truncate(2);
    assert_eq!(pn_commutation_residual(&t, &b2, Label::Delta3, 0), 0.0);
    assert_eq!(pn_commutation_residual(&t, &b2, Label::Delta2, 2), 0.0);
    let b5 = build_fuzzy_basis(t.alg(), 5, Ordering::SpinAscending).unwrap();
    for l in [Label::Delta1, Label::Delta2, Label::Delta3, Label::Delta4] {
        for n in 0..=5 {
            assert_eq!(pn_commutation_residual(&t, &b5, l, n), 0.0);
        }
    }
}

#[test]
fn phi_examples() {
    let s = SuQ2::new(Exact::from_ratio(1, 2));
    let b2 = build_fuzzy_basis(&s, 2, Ordering::SpinAscending).unwrap();
    assert_eq!(phi_projection(&s, &b2, &s.one()).unwrap(), s.one());
    let x = s.add(&s.pow(&s.big_a(), 2), &s.big_b_star());
    assert_eq!(phi_projection(&s, &b2, &x).unwrap(), x);
    let b4 = build_fuzzy_basis(&s, 4, Ordering::SpinAscending).unwrap();
    let layers = spin_layers(&s, &b4, &s.pow(&s.big_b(), 4)).unwrap();
    let top = &layers[&4];
    assert!(phi_projection(&s, &b2, top).unwrap().is_zero());
    assert!(phi_projection(&s, &b2, &s.a()).is_err());
}

#[test]
fn commutant_examples() {
    let t = setup();
    let s = t.alg();
    assert_eq!(commutant_residual(&t, &s.one(), &s.big_b(), 4), 0.0);
    assert_eq!(commutant_residual(&t, &s.big_a(), &s.one(), 4), 0.0);
    assert_eq!(commutant_residual(&t, &s.big_a(), &s.big_b(), 4), 0.0);
}

#[test]
fn basis_independence_of_phi() {
    let s = SuQ2::new(Exact::from_ratio(1, 2));
    let up = build_fuzzy_basis(&s, 3, Ordering::SpinAscending).unwrap();
    let down = build_fuzzy_basis(&s, 3, Ordering::SpinDescending).unwrap();
    assert_ne!(up.vectors, down.vectors);
    assert_eq!(gram_certificate(&s, &down), 0.0);
    let mut r = rng(11);
    for _ in 0..5 {
        let x = random_sphere(&s, &mut r, 5, 6);
        assert_eq!(phi_projection(&s, &up, &x).unwrap(), phi_projection(&s, &down, &x).unwrap());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn phi_idempotent_and_nested(seed in any::<u64>()) {
        let s = SuQ2::new(Exact::from_ratio(1, 2));
        let b4 = build_fuzzy_basis(&s, 4, Ordering::SpinAscending).unwrap();
        let b2 = b4.truncate(2);
        let x = random_sphere(&s, &mut rng(seed), 5, 5);
        let p4 = phi_projection(&s, &b4, &x).unwrap();
        let p2 = phi_projection(&s, &b2, &x).unwrap();
        prop_assert_eq!(phi_projection(&s, &b4, &p4).unwrap(), p4.clone());
        prop_assert_eq!(phi_projection(&s, &b2, &p4).unwrap(), p2.clone());
        prop_assert_eq!(phi_projection(&s, &b4, &p2).unwrap(), p2.clone());
        prop_assert_eq!(parseval_sum(&s, &b4, &x), s.haar_inner(&p4, &p4));
    }

    #[test]
    fn modular_conjugation_is_antiunitary_involution(seed in any::<u64>()) {
        let t = setup();
        let s = t.alg();
        let f = s.field();
        let mut r = rng(seed);
        let x = random_element(s, &mut r, 3, 4);
        let y = random_element(s, &mut r, 3, 4);
        prop_assert_eq!(modular_conjugation(&t, &modular_conjugation(&t, &x)), x.clone());
        let jx = modular_conjugation(&t, &x);
        let jy = modular_conjugation(&t, &y);
        prop_assert_eq!(s.haar_inner(&jx, &jy), f.conj(&s.haar_inner(&x, &y)));
    }

    #[test]
    fn random_commutant(seed in any::<u64>()) {
        let t = setup();
        let s = t.alg();
        let mut r = rng(seed);
        let x = random_element(s, &mut r, 2, 3);
        let y = random_element(s, &mut r, 2, 3);
        prop_assert_eq!(commutant_residual(&t, &x, &y, 5), 0.0);
    }
}
