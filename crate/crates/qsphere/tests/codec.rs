use num_bigint::BigInt;
use num_rational::BigRational;
use proptest::prelude::*;
use serde_json::json;

use qsphere::codec::{self, Codec, FieldKey};
use qsphere_core::berezin::Berezin;
use qsphere_core::uq_actions::Actions;
use qsphere_core::{Exact, Field, Float, Monomial, SuQ2};

fn half() -> SuQ2<Exact> {
    SuQ2::new(Exact::from_ratio(1, 2))
}

fn ratio(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

#[test]
fn exact_coefficients_use_integer_keys() {
    let alg = half();
    let x = qsphere_core::expr::parse(&alg, "b*a").unwrap();
    let v = codec::element_to_json(alg.field(), &x);
    assert_eq!(v, json!([{"aExp": 1, "bExp": 1, "bStarExp": 0, "coeffNum": 1, "coeffDen": 2}]));
    assert_eq!(alg.field().element_text(&x), "1/2*a*b");
}

#[test]
fn sqrt_q_and_imaginary_parts_survive_json() {
    let alg = half();
    let f = alg.field();
    let c = f.add(&f.q_half_pow(1), &f.mul(&f.imag_unit(), &f.from_rational(&ratio(-3, 7))));
    let x = alg.term(Monomial::new(-2, 1, 3), c);
    let v = codec::element_to_json(f, &x);
    let o = v[0].as_object().unwrap();
    assert!(o.contains_key("coeffSqrtqNum") && o.contains_key("coeffImNum"));
    let y = codec::element_from_json(&alg, &v).unwrap();
    assert!(alg.eq(&x, &y));
}

#[test]
fn huge_integers_are_strings() {
    let alg = half();
    let f = alg.field();
    let big = BigRational::from_integer(BigInt::from(10).pow(30));
    let x = alg.term(Monomial::ONE, f.from_rational(&big));
    let v = codec::element_to_json(f, &x);
    assert_eq!(v[0]["coeffNum"], json!("1000000000000000000000000000000"));
    assert!(alg.eq(&codec::element_from_json(&alg, &v).unwrap(), &x));
}

#[test]
fn float_json_is_stable() {
    let alg = SuQ2::new(Float::new(&ratio(1, 2), 30));
    let x = qsphere_core::expr::parse(&alg, "(1/3)*b*bs + as - 2*i*bs").unwrap();
    let v = codec::element_to_json(alg.field(), &x);
    let y = codec::element_from_json(&alg, &v).unwrap();
    assert_eq!(codec::element_to_json(alg.field(), &y), v);
}

#[test]
fn malformed_elements_are_rejected() {
    let alg = half();
    assert!(codec::element_from_json(&alg, &json!({"aExp": 0})).is_err());
    assert!(codec::element_from_json(&alg, &json!([{"aExp": 0, "bExp": -1, "bStarExp": 0, "coeffNum": 1, "coeffDen": 1}]))
        .is_err());
    assert!(codec::element_from_json(&alg, &json!([{"aExp": 0, "bExp": 0, "bStarExp": 0, "coeffNum": 1, "coeffDen": 0}]))
        .is_err());
}

#[test]
fn basis_round_trip_and_key_mismatch() {
    let alg = half();
    let b = Berezin::new(alg.clone()).basis(2).unwrap();
    let key = FieldKey::of(&ratio(1, 2), alg.field());
    let v = codec::basis_to_json(&key, alg.field(), &b);
    let back = codec::basis_from_json(&key, &alg, &v).unwrap().expect("key matches");
    assert_eq!(back.level, b.level);
    assert_eq!(back.vectors.len(), b.vectors.len());
    for (u, w) in back.vectors.iter().zip(&b.vectors) {
        assert_eq!((u.spin, u.weight), (w.spin, w.weight));
        assert!(alg.eq(&u.element, &w.element));
    }
    let other = FieldKey::of(&ratio(1, 3), &Exact::from_ratio(1, 3));
    assert!(codec::basis_from_json(&other, &alg, &v).unwrap().is_none());
}

#[test]
fn pairing_table_round_trip() {
    let alg = half();
    let acts = Actions::new(alg.clone());
    let v = codec::table_to_json(alg.field(), acts.table());
    let t = codec::table_from_json(&alg, &v).unwrap();
    assert!(Actions::with_table(alg.clone(), t).is_ok());
}

#[test]
fn pairing_table_accepts_expression_entries() {
    let alg = half();
    let v = json!({
        "k": [["2*sqrtq", 0], [0, "sqrtq"]],
        "kinv": [["sqrtq", 0], [0, "2*sqrtq"]],
        "e": [[0, 0], [-1, 0]],
        "f": [[0, "sqrtq^2"], [0, 0]],
    });
    let t = codec::table_from_json(&alg, &v).unwrap();
    let f = alg.field();
    assert!(f.approx_eq(&t.k[1][1], &f.q_half_pow(1)));
    assert!(f.approx_eq(&t.f[0][1], &f.from_rational(&ratio(1, 2))));
    assert!(t.h.is_none());
}

fn monomial() -> impl Strategy<Value = Monomial> {
    (-5i32..=5, 0u32..=5, 0u32..=5)
        .prop_filter("degree at most 5", |(a, b, bs)| a.unsigned_abs() + b + bs <= 5)
        .prop_map(|(a, b, bs)| Monomial::new(a, b, bs))
}

fn coefficient() -> impl Strategy<Value = [(i64, i64); 4]> {
    prop::array::uniform4((-9i64..=9, 1i64..=9))
}

proptest! {
    #[test]
    fn render_then_parse_is_identity(terms in prop::collection::vec((monomial(), coefficient()), 1..5)) {
        let alg = half();
        let f = alg.field();
        let mut x = alg.zero();
        for (m, parts) in &terms {
            let [re, im, sre, sim] = parts.map(|(n, d)| ratio(n, d));
            let c = f.add(
                &f.from_complex_rational(&re, &im),
                &f.mul(&f.q_half_pow(1), &f.from_complex_rational(&sre, &sim)),
            );
            x = alg.add(&x, &alg.term(*m, c));
        }
        let y = qsphere_core::expr::parse(&alg, &f.element_text(&x)).unwrap();
        prop_assert!(alg.eq(&x, &y));
        let z = codec::element_from_json(&alg, &codec::element_to_json(f, &x)).unwrap();
        prop_assert!(alg.eq(&x, &z));
    }
}
