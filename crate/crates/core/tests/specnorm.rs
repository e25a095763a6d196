use num_complex::Complex64;
use proptest::prelude::*;
use qsphere_core::berezin::Berezin;
use qsphere_core::linalg::{dense_norm, top_singular, SvdOptions};
use qsphere_core::random::{random_element, random_selfadjoint_sphere, random_sphere, rng};
use qsphere_core::specnorm::*;
use qsphere_core::uq_actions::Actions;
use qsphere_core::{expr, Exact, Float, SuQ2};

fn acts(p: i64, r: i64) -> Actions<Exact> {
    Actions::new(SuQ2::new(Exact::from_ratio(p, r)))
}

fn opts(m: usize) -> NormOptions {
    NormOptions { trunc: m, ..Default::default() }
}

#[test]
fn unit_and_generator_norms() {
    let t = acts(1, 2);
    let s = t.alg();
    let one = operator_norm(s, &s.one(), &opts(50));
    assert!((one.lower - 1.0).abs() < 1e-12 && one.upper == 1.0);
    let b = operator_norm(s, &s.b(), &opts(50));
    assert!((b.lower - 1.0).abs() < 1e-12);
    let a_diag = represent(s, &s.big_a(), 0.3, 10).to_dense();
    for n in 0..10 {
        assert!((a_diag[(n, n)].re - 0.25f64.powi(n as i32)).abs() < 1e-15);
    }
    let id = represent(s, &s.one(), 1.0, 8).to_dense();
    assert_eq!(id, nalgebra::DMatrix::<Complex64>::identity(8, 8));
}

#[test]
fn adjoint_representation() {
    let t = acts(3, 5);
    let s = t.alg();
    let x = random_element(s, &mut rng(4), 3, 5);
    let m = represent(s, &x, 0.9, 30).to_dense();
    let ms = represent(s, &s.star(&x), 0.9, 30).to_dense();
    assert!((m.adjoint() - ms).norm() < 1e-12);
}

#[test]
fn sphere_norms_are_theta_independent() {
    let t = acts(1, 2);
    let s = t.alg();
    let x = random_sphere(s, &mut rng(8), 3, 5);
    let vals: Vec<f64> = (0..6)
        .map(|k| top_singular(&represent(s, &x, k as f64, 60), SvdOptions::default()).sigma)
        .collect();
    let spread = vals.iter().cloned().fold(f64::MIN, f64::max) - vals.iter().cloned().fold(f64::MAX, f64::min);
    assert!(spread < 1e-12);
    assert!(theta_invariant(&[&x]));
    assert!(theta_invariant(&[&s.add(&s.a(), &s.b())]));
    let skew = s.add(&s.add(&s.a(), &s.b()), &s.mul(&s.a(), &s.b()));
    assert!(!theta_invariant(&[&skew]));
}

#[test]
fn lip_of_unit_vanishes() {
    let t = acts(1, 2);
    let l = lip_norm(&t, &t.alg().one(), &opts(50)).unwrap();
    assert_eq!(l.value.lower, 0.0);
    assert!(lip_norm(&t, &t.alg().a(), &opts(50)).is_err());
}

#[test]
fn lanczos_agrees_with_dense_svd_on_lip_matrix() {
    let t = acts(9, 10);
    let s = t.alg();
    let x = random_selfadjoint_sphere(s, &mut rng(21), 3, 4);
    let d = t.delta_matrix(&x).unwrap();
    let m = 60;
    let blocks: [[_; 2]; 2] = core::array::from_fn(|i| core::array::from_fn(|j| represent(s, &d[i][j], 0.0, m).to_dense()));
    let mut full = nalgebra::DMatrix::<Complex64>::zeros(2 * m, 2 * m);
    for i in 0..2 {
        for j in 0..2 {
            full.view_mut((i * m, j * m), (m, m)).copy_from(&blocks[i][j]);
        }
    }
    let est = lip_norm(&t, &x, &NormOptions { trunc: m, doublings: 0, ..Default::default() }).unwrap();
    assert!((est.value.lower - dense_norm(&full)).abs() < 1e-10 * est.value.lower);
}

#[test]
fn classical_model() {
    let t = acts(1, 1);
    let s = t.alg();
    let a = operator_norm(s, &s.big_a(), &NormOptions::default());
    assert!((a.lower - 1.0).abs() < 1e-12);
    let b = operator_norm(s, &s.big_b(), &NormOptions::default());
    assert!((b.lower - 0.5).abs() < 1e-3);
    let l = lip_norm(&t, &s.big_a(), &NormOptions::default()).unwrap();
    assert!(l.value.lower > 0.0 && l.value.lower <= l.value.upper);
}

#[test]
fn gram_oracle_examples() {
    let q = num_rational::BigRational::new(1.into(), 2.into());
    let cap = 20;
    let sf = SuQ2::new(Float::new(&q, gram_precision(0.5, cap)));
    let tf = Actions::new(sf.clone());
    let g = lip_norm_gram_oracle(&tf, &sf.one(), &GramOptions::default()).unwrap();
    assert_eq!(g.lower, 0.0);
    let t = acts(1, 2);
    let mut r = rng(99);
    for _ in 0..4 {
        let x = random_sphere(t.alg(), &mut r, 2, 3);
        let text = expr::render_exact(&x);
        let xf = expr::parse(&sf, &text).unwrap();
        let g = lip_norm_gram_oracle(&tf, &xf, &GramOptions { degree_cap: cap, step: 4, rel_tol: 1e-6 }).unwrap();
        assert!(g.ladder.windows(2).all(|w| w[1].1 >= w[0].1 - 1e-12));
        let l = lip_norm(&t, &x, &opts(200)).unwrap();
        assert!((g.lower - l.value.lower).abs() <= 1e-4 * l.value.lower, "{} vs {}", g.lower, l.value.lower);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn sandwich_monotone_and_c_star(seed in any::<u64>()) {
        let t = acts(1, 2);
        let s = t.alg();
        let x = random_element(s, &mut rng(seed), 3, 4);
        let small = operator_norm(s, &x, &NormOptions { trunc: 20, doublings: 0, theta_grid: 8, ..Default::default() });
        let big = operator_norm(s, &x, &NormOptions { trunc: 40, doublings: 0, theta_grid: 8, ..Default::default() });
        prop_assert!(small.lower <= big.lower + 1e-12);
        prop_assert!(big.lower <= big.upper);
        let o = NormOptions { trunc: 50, doublings: 3, theta_grid: 4, ..Default::default() };
        let full = operator_norm(s, &x, &o);
        let xx = operator_norm(s, &s.mul(&s.star(&x), &x), &o);
        // ‖P x*x P‖ = ‖xP‖² ≥ ‖PxP‖² at every truncation
        prop_assert!(xx.lower >= full.lower * full.lower * (1.0 - 1e-10));
        prop_assert!(xx.lower <= xx.upper && full.upper * full.upper >= xx.lower * (1.0 - 1e-10));
        if full.converged && xx.converged {
            prop_assert!((xx.lower - full.lower * full.lower).abs() <= 1e-6 * xx.lower);
        }
    }

    #[test]
    fn lip_properties(seed in any::<u64>()) {
        let t = acts(1, 2);
        let s = t.alg();
        let x = random_sphere(s, &mut rng(seed), 3, 4);
        let l = lip_norm(&t, &x, &opts(100)).unwrap();
        let ls = lip_norm(&t, &s.star(&x), &opts(100)).unwrap();
        prop_assert!((l.value.lower - ls.value.lower).abs() <= 1e-9 * l.value.lower.max(1e-12));
        prop_assert!(l.value.lower <= l.value.upper);
        for row in &l.components {
            for e in row {
                let single = operator_norm(s, e, &opts(100));
                prop_assert!(single.lower <= l.value.lower * (1.0 + 1e-9) + 1e-12);
            }
        }
        let b = Berezin::new(s.clone());
        for n in 1..=3 {
            let lb = lip_norm(&t, &b.via_spectrum(&x, n).unwrap(), &opts(100)).unwrap();
            prop_assert!(lb.value.lower <= l.value.lower * (1.0 + 1e-6) + 1e-12);
        }
    }
}
