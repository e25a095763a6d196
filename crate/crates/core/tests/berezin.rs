use num_bigint::BigInt;
use num_rational::BigRational;
use proptest::prelude::*;
use qsphere_core::berezin::Berezin;
use qsphere_core::gns::{build_fuzzy_basis, phi_projection, Ordering};
use qsphere_core::random::{random_sphere, rng};
use qsphere_core::{Exact, Field, SuQ2};

fn half() -> Berezin<Exact> {
    Berezin::new(SuQ2::new(Exact::from_ratio(1, 2)))
}

fn ratio(p: i64, r: i64) -> BigRational {
    BigRational::new(BigInt::from(p), BigInt::from(r))
}

fn factorial(n: u32) -> BigInt {
    (1..=n).fold(BigInt::from(1), |acc, k| acc * k)
}

#[test]
fn h1_of_a_by_hand() {
    // a* A a = q²A − q⁴A², so h_1(A) = (1+q²)(q²h(A) − q⁴h(A²)) = 4/21 at q = 1/2
    let b = half();
    let s = b.alg();
    assert_eq!(b.h_n(&s.big_a(), 1), s.field().from_rational(&ratio(4, 21)));
    assert_eq!(b.h_n(&s.big_a(), 0), s.haar(&s.big_a()));
}

#[test]
fn beta1_of_a_matches_spectrum() {
    let b = half();
    let s = b.alg();
    let f = s.field();
    let c11 = b.eigenvalue(1, 1).unwrap();
    let h_a = s.haar(&s.big_a());
    let expected = s.add_scalar(&s.scale(&s.big_a(), &c11), &f.mul(&f.sub(&f.one(), &c11), &h_a));
    assert_eq!(b.via_coproduct(&s.big_a(), 1).unwrap(), expected);
}

#[test]
fn high_spin_layers_vanish() {
    let b = half();
    let s = b.alg();
    let basis = build_fuzzy_basis(s, 3, Ordering::SpinAscending).unwrap();
    for v in basis.vectors.iter().filter(|v| v.spin == 3) {
        assert!(b.via_coproduct(&v.element, 2).unwrap().is_zero());
    }
    assert!(b.via_coproduct(&s.a(), 1).is_err());
}

#[test]
fn spectrum_in_unit_interval() {
    let b = half();
    let f = b.alg().field().clone();
    for n in 1..=4 {
        let sp = b.spectrum(n, n + 1).unwrap();
        assert_eq!(sp.eigenvalues[0], f.one());
        assert_eq!(sp.eigenvalues[n as usize + 1], f.zero());
        for c in &sp.eigenvalues {
            let r = f.to_c64(c);
            assert!(r.im == 0.0 && (0.0..=1.0).contains(&r.re));
        }
    }
}

#[test]
fn classical_spectrum_oracle() {
    let b = Berezin::new(SuQ2::new(Exact::from_ratio(1, 1)));
    let f = b.alg().field().clone();
    for n in 0..=4u32 {
        let sp = b.spectrum(n, n).unwrap();
        for (k, c) in sp.eigenvalues.iter().enumerate() {
            let k = k as u32;
            let oracle = BigRational::new(
                factorial(n) * factorial(n + 1),
                factorial(n - k) * factorial(n + k + 1),
            );
            assert_eq!(*c, f.from_rational(&oracle), "N={n} n={k}");
        }
    }
}

#[test]
fn dual_algorithms_agree() {
    let b = half();
    let s = b.alg();
    let mut r = rng(2024);
    for _ in 0..10 {
        let x = random_sphere(s, &mut r, 4, 6);
        for n in 1..=3 {
            assert_eq!(b.via_coproduct(&x, n).unwrap(), b.via_spectrum(&x, n).unwrap());
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn berezin_factors_through_phi(seed in any::<u64>()) {
        let b = half();
        let s = b.alg();
        let x = random_sphere(s, &mut rng(seed), 4, 5);
        let basis = build_fuzzy_basis(s, 2, Ordering::SpinAscending).unwrap();
        let px = phi_projection(s, &basis, &x).unwrap();
        prop_assert_eq!(b.via_coproduct(&px, 2).unwrap(), b.via_coproduct(&x, 2).unwrap());
        let b4 = build_fuzzy_basis(s, 3, Ordering::SpinAscending).unwrap();
        let bx = b.via_spectrum(&x, 2).unwrap();
        prop_assert_eq!(phi_projection(s, &b4, &bx).unwrap(), b.via_spectrum(&phi_projection(s, &b4, &x).unwrap(), 2).unwrap());
    }

    #[test]
    fn berezin_levels_commute(seed in any::<u64>()) {
        let b = half();
        let s = b.alg();
        let x = random_sphere(s, &mut rng(seed), 3, 5);
        let b12 = b.via_spectrum(&b.via_spectrum(&x, 2).unwrap(), 1).unwrap();
        let b21 = b.via_spectrum(&b.via_spectrum(&x, 1).unwrap(), 2).unwrap();
        prop_assert_eq!(b12, b21);
        let y = b.via_coproduct(&x, 2).unwrap();
        prop_assert!(y.degree() <= 2 * 2);
        prop_assert!(y.iter().all(|(m, _)| qsphere_core::random::sphere_degree(*m) <= 2));
    }

    #[test]
    fn h_n_positive_on_squares(seed in any::<u64>()) {
        let b = half();
        let s = b.alg();
        let x = qsphere_core::random::random_element(s, &mut rng(seed), 2, 3);
        let xx = s.mul(&s.star(&x), &x);
        for n in 0..3 {
            let v = s.field().to_c64(&b.h_n(&xx, n));
            prop_assert!(v.re >= 0.0 && v.im == 0.0);
        }
    }
}

#[test]
fn slice_estimate() {
    let acts = qsphere_core::uq_actions::Actions::new(SuQ2::new(Exact::from_ratio(1, 2)));
    let s = acts.alg().clone();
    let b = Berezin::new(s.clone());
    let opts = qsphere_core::specnorm::NormOptions { trunc: 60, doublings: 2, ..Default::default() };
    let unit = b.slice_lip_check(&acts, &s.one(), &s.a(), &s.b(), &opts).unwrap();
    assert!(unit.slice.iter().all(|(m, _)| m.degree() == 0));
    assert_eq!(unit.lip_of_slice.lower, 0.0);
    let x = s.add(&s.big_a(), &s.mul(&s.big_b(), &s.big_a()));
    let c = b.slice_lip_check(&acts, &x, &s.one(), &s.one(), &opts).unwrap();
    assert_eq!(c.slice, b.via_coproduct(&x, 0).unwrap());
    assert!((c.xi_norm - 1.0).abs() < 1e-15 && c.holds(1e-9));
    let mut r = qsphere_core::random::rng(41);
    for _ in 0..4 {
        let x = qsphere_core::random::random_sphere(&s, &mut r, 2, 3);
        let xi = qsphere_core::random::random_element(&s, &mut r, 2, 3);
        let zeta = qsphere_core::random::random_element(&s, &mut r, 2, 3);
        let chk = b.slice_lip_check(&acts, &x, &xi, &zeta, &opts).unwrap();
        assert!(chk.slice.is_sphere());
        assert!(chk.holds(1e-4), "{} > {}", chk.lip_of_slice.lower, chk.bound);
    }
}
