use proptest::prelude::*;
use qsphere_core::random::{random_element, random_selfadjoint_sphere, random_sphere, rng};
use qsphere_core::uq_actions::{Actions, Gen, Label};
use qsphere_core::{Exact, SuQ2};

fn setup() -> Actions<Exact> {
    Actions::new(SuQ2::new(Exact::from_ratio(1, 2)))
}

#[test]
fn generator_examples() {
    let t = setup();
    let s = t.alg();
    assert_eq!(t.left_action(Gen::K, &s.one()), s.one());
    assert!(t.apply(Label::Delta1, &s.one()).is_zero());
    let d = t.delta_matrix(&s.one()).unwrap();
    assert!(d.iter().flatten().all(|e| e.is_zero()));
    let (p1, p2) = t.dirac_components(&s.one()).unwrap();
    assert!(p1.is_zero() && p2.is_zero());
    assert!(t.delta_matrix(&s.a()).is_err());
    assert_eq!(t.modular(&s.one(), false), s.one());
    assert_eq!(t.apply(Label::Delta4, &s.big_a()), s.neg(&t.apply(Label::Delta3, &s.big_a())));
}

#[test]
fn delta_matrix_entries_stay_in_sphere() {
    let t = setup();
    let s = t.alg();
    for x in [s.big_a(), s.big_b(), s.mul(&s.big_a(), &s.big_b_star())] {
        let d = t.delta_matrix(&x).unwrap();
        assert!(d.iter().flatten().all(|e| e.is_sphere()));
    }
}

#[test]
fn dirac_components_shift_weight_by_two() {
    let t = setup();
    let s = t.alg();
    let x = s.add(&s.big_b(), &s.mul(&s.big_a(), &s.big_b_star()));
    let (p1, p2) = t.dirac_components(&x).unwrap();
    assert!(p1.iter().all(|(m, _)| m.right_degree() == -2));
    assert!(p2.iter().all(|(m, _)| m.right_degree() == 2));
}

#[test]
fn classical_delta3_uses_limit_table() {
    let t = Actions::new(SuQ2::new(Exact::from_ratio(1, 1)));
    let s = t.alg();
    let mut table = t.table().clone();
    table.h = None;
    let bare = Actions::with_table(s.clone(), table);
    assert!(bare.is_err());
    assert!(t.apply(Label::Delta3, &s.big_a()).is_zero());
    assert_eq!(t.apply(Label::Delta3, &s.big_b()), s.big_b());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn twisted_trace(seed in any::<u64>()) {
        let t = setup();
        let s = t.alg();
        let mut r = rng(seed);
        let x = random_element(s, &mut r, 3, 4);
        let y = random_element(s, &mut r, 3, 4);
        let lhs = s.haar(&s.mul(&x, &y));
        let rhs = s.haar(&s.mul(&t.modular(&y, false), &x));
        prop_assert_eq!(lhs, rhs);
    }

    #[test]
    fn modular_square_root(seed in any::<u64>()) {
        let t = setup();
        let s = t.alg();
        let x = random_element(s, &mut rng(seed), 3, 5);
        let half = t.modular(&x, true);
        prop_assert_eq!(t.modular(&half, true), t.modular(&x, false));
        prop_assert_eq!(t.modular_inverse_half(&half), x.clone());
        for (n, part) in s.right_degree_decompose(&x) {
            let image = t.modular(&part, false);
            prop_assert!(image.iter().all(|(m, _)| m.right_degree() == n));
        }
    }

    #[test]
    fn k_actions_are_automorphisms(seed in any::<u64>()) {
        let t = setup();
        let s = t.alg();
        let mut r = rng(seed);
        let x = random_element(s, &mut r, 3, 3);
        let y = random_element(s, &mut r, 3, 3);
        let xy = s.mul(&x, &y);
        prop_assert_eq!(t.left_action(Gen::K, &xy), s.mul(&t.left_action(Gen::K, &x), &t.left_action(Gen::K, &y)));
        prop_assert_eq!(t.partial_action(Gen::K, &xy), s.mul(&t.partial_action(Gen::K, &x), &t.partial_action(Gen::K, &y)));
    }

    #[test]
    fn derivations_respect_right_grading(seed in any::<u64>()) {
        let t = setup();
        let s = t.alg();
        let x = random_element(s, &mut rng(seed), 3, 5);
        for l in [Label::Delta1, Label::Delta2, Label::Delta3] {
            for (n, part) in s.right_degree_decompose(&x) {
                prop_assert!(t.apply(l, &part).iter().all(|(m, _)| m.right_degree() == n));
            }
        }
    }

    #[test]
    fn selfadjoint_input_gives_skew_delta_matrix(seed in any::<u64>()) {
        let t = setup();
        let s = t.alg();
        let x = random_selfadjoint_sphere(s, &mut rng(seed), 2, 3);
        let d = t.delta_matrix(&x).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                prop_assert_eq!(s.star(&d[j][i]), s.neg(&d[i][j]));
            }
        }
    }

    #[test]
    fn dirac_components_adjoint_symmetry(seed in any::<u64>()) {
        let t = setup();
        let s = t.alg();
        let x = random_sphere(s, &mut rng(seed), 2, 3);
        let (p1, p2) = t.dirac_components(&x).unwrap();
        let (r1, r2) = t.dirac_components(&s.star(&x)).unwrap();
        prop_assert_eq!(r1, s.neg(&s.star(&p2)));
        prop_assert_eq!(r2, s.neg(&s.star(&p1)));
    }

    #[test]
    fn delta_matches_conjugated_dirac(seed in any::<u64>()) {
        let t = setup();
        let s = t.alg();
        let x = random_sphere(s, &mut rng(seed), 3, 4);
        prop_assert_eq!(t.delta_matrix(&x).unwrap(), t.conjugated_dirac(&x).unwrap());
    }
}
