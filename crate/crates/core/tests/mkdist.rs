use qsphere_core::berezin::Berezin;
use qsphere_core::mkdist::*;
use qsphere_core::random::{random_selfadjoint_sphere, rng};
use qsphere_core::specnorm::NormOptions;
use qsphere_core::uq_actions::Actions;
use qsphere_core::{Exact, Field, SuQ2};

fn setup(p: i64, r: i64) -> (Actions<Exact>, Berezin<Exact>) {
    let acts = Actions::new(SuQ2::new(Exact::from_ratio(p, r)));
    let b = Berezin::new(acts.alg().clone());
    (acts, b)
}

fn quick(n: u32, m: u32, mode: Mode) -> OptimizationProblem {
    OptimizationProblem {
        n,
        m,
        mode,
        norm: NormOptions { trunc: 60, doublings: 1, ..Default::default() },
        restarts: 3,
        max_iters: 120,
        ..Default::default()
    }
}

#[test]
fn estimate_dominates_probe_and_witness_is_selfadjoint() {
    let (acts, b) = setup(1, 2);
    let s = acts.alg();
    let p = quick(2, 3, Mode::Certified);
    let est = estimate_distance(&acts, &b, &p, None).unwrap();
    assert!(s.is_selfadjoint(&est.witness));
    let (probe, _, _) = witness_ratio(&acts, &b, &s.big_a(), 2, Mode::Certified, &p.norm).unwrap();
    assert!(est.value >= probe * (1.0 - 1e-9));
    let (again, defect, _) = witness_ratio(&acts, &b, &est.witness, 2, Mode::Certified, &p.norm).unwrap();
    assert_eq!(again, est.value);
    assert_eq!(defect, est.defect);
    assert!(est.trace.windows(2).all(|w| w[1] >= w[0]));
    assert_eq!(est.restart_values.len(), 3);
}

#[test]
fn ratio_is_translation_and_scale_invariant() {
    let (acts, b) = setup(1, 2);
    let s = acts.alg();
    let f = s.field();
    let opts = NormOptions { trunc: 60, doublings: 1, ..Default::default() };
    let x = random_selfadjoint_sphere(s, &mut rng(3), 2, 4);
    let (base, _, _) = witness_ratio(&acts, &b, &x, 1, Mode::Certified, &opts).unwrap();
    for c in [-10, -1, 1, 10] {
        let y = s.add_scalar(&x, &f.from_i64(c));
        let (r, _, _) = witness_ratio(&acts, &b, &y, 1, Mode::Certified, &opts).unwrap();
        assert!((r - base).abs() <= 1e-12 * base);
    }
    let search = DistanceSearch::new(&acts, &b, quick(1, 2, Mode::Certified)).unwrap();
    let t = search.coordinates(&x);
    let o = search.objective(&t);
    for c in [2.0, -3.0, 0.1] {
        let u: Vec<f64> = t.iter().map(|v| v * c).collect();
        assert!((search.objective(&u) - o).abs() <= 1e-9 * o);
    }
}

#[test]
fn coordinates_round_trip() {
    let (acts, b) = setup(3, 5);
    let s = acts.alg();
    let search = DistanceSearch::new(&acts, &b, quick(1, 2, Mode::Certified)).unwrap();
    assert_eq!(search.basis().len(), 8);
    for e in search.basis() {
        assert!(s.is_selfadjoint(e));
    }
    let x = s.add(&s.big_a(), &s.add(&s.big_b(), &s.big_b_star()));
    let t = search.coordinates(&x);
    let y = search.element(&t);
    // element() normalizes by max |t_k|
    let scale = t.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let back: Vec<f64> = search.coordinates(&y).iter().map(|v| v * scale).collect();
    for (u, v) in t.iter().zip(&back) {
        assert!((u - v).abs() < 1e-9 * scale);
    }
}

#[test]
fn certified_below_heuristic() {
    let (acts, b) = setup(1, 2);
    for n in 1..=2 {
        let c = estimate_distance(&acts, &b, &quick(n, 2, Mode::Certified), None).unwrap();
        let h = estimate_distance(&acts, &b, &quick(n, 2, Mode::Heuristic), None).unwrap();
        assert!(c.value <= h.value, "N={n}: {} > {}", c.value, h.value);
    }
}

#[test]
fn ladder_in_m_is_monotone() {
    let (acts, b) = setup(1, 2);
    let ests = distance_ladder(&acts, &b, &quick(1, 1, Mode::Certified), &[1, 2, 3]).unwrap();
    for w in ests.windows(2) {
        assert!(w[1].value >= w[0].value * (1.0 - 1e-6), "{} then {}", w[0].value, w[1].value);
    }
}

#[test]
fn certified_trend_in_n() {
    let (acts, b) = setup(9, 10);
    let mut prev = f64::INFINITY;
    for n in 1..=5 {
        let d = estimate_distance(&acts, &b, &quick(n, 4, Mode::Certified), None).unwrap();
        assert!(d.value <= prev + 1e-3, "N={n}");
        prev = d.value;
    }
}

#[test]
fn approximation_harness() {
    let (acts, b) = setup(1, 2);
    let s = acts.alg();
    let opts = NormOptions { trunc: 60, doublings: 1, ..Default::default() };
    assert_eq!(
        approx_inequality_check(&acts, &b, &s.one(), 1, 1.0, 1e-3, &opts).unwrap_err(),
        DistError::Scalar
    );
    let one = berezin_approximant(&acts, &b, &s.one(), 3, &opts).unwrap();
    assert_eq!(one.y, s.one());
    assert_eq!((one.lip_slack, one.dist_slack), (0.0, 0.0));
    let a = s.big_a();
    let r: Vec<f64> =
        [1, 4, 8].iter().map(|&n| approx_inequality_check(&acts, &b, &a, n, 1.0, 1e-3, &opts).unwrap().ratio).collect();
    assert!(r[0] > r[1] && r[1] > r[2] && r[2] < 1e-2);
    let mut g = rng(17);
    for _ in 0..5 {
        let x = random_selfadjoint_sphere(s, &mut g, 2, 3);
        for n in 1..=3 {
            assert!(berezin_approximant(&acts, &b, &x, n, &opts).unwrap().lip_slack >= -1e-6);
        }
    }
    let probes = probe_suite(s);
    assert_eq!(probes.len(), 5);
    for (_, x) in &probes {
        assert!(s.is_selfadjoint(x));
        assert!(s.field().is_zero(&s.haar(x)));
    }
}

#[test]
fn rejects_bad_levels() {
    let (acts, b) = setup(1, 2);
    assert!(matches!(DistanceSearch::new(&acts, &b, quick(0, 2, Mode::Certified)), Err(DistError::InvalidLevel)));
    let (c, cb) = setup(1, 1);
    assert!(matches!(DistanceSearch::new(&c, &cb, quick(1, 2, Mode::Certified)), Err(DistError::Classical)));
}
