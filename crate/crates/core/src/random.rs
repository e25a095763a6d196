//! Seeded random test elements.

use alloc::vec::Vec;

use num_bigint::BigInt;
use num_rational::BigRational;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::qhopf::{Element, Monomial, SuQ2};
use crate::scalar::Field;

pub type TestRng = ChaCha8Rng;

pub fn rng(seed: u64) -> TestRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Spin degree of a zero-weight monomial: its degree as a word in `A`, `B`, `B*`.
pub fn sphere_degree(m: Monomial) -> u32 {
    m.b.max(m.bs)
}

/// Zero-weight monomials of spin degree at most `d`.
pub fn sphere_monomials(d: u32) -> Vec<Monomial> {
    let mut out = Vec::new();
    for l in 0..=d {
        for m in 0..=d {
            out.push(Monomial::new(m as i32 - l as i32, l, m));
        }
    }
    out.sort();
    out
}

fn small_rational(rng: &mut TestRng) -> BigRational {
    let mut num = rng.gen_range(-4i64..=4);
    if num == 0 {
        num = 1;
    }
    let den = rng.gen_range(1i64..=3);
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

fn coefficient<F: Field>(f: &F, rng: &mut TestRng, complex: bool) -> F::E {
    let re = small_rational(rng);
    if complex && rng.gen_bool(0.5) {
        let im = small_rational(rng);
        f.from_complex_rational(&re, &im)
    } else {
        f.from_rational(&re)
    }
}

fn from_pool<F: Field>(
    alg: &SuQ2<F>,
    rng: &mut TestRng,
    pool: &[Monomial],
    terms: usize,
    complex: bool,
) -> Element<F::E> {
    let f = alg.field();
    let mut x = alg.zero();
    for m in pool.choose_multiple(rng, terms.min(pool.len())) {
        x = alg.add(&x, &alg.term(*m, coefficient(f, rng, complex)));
    }
    x
}

/// Random element of O(SU_q(2)) with up to `terms` monomials of degree at most `degree`.
pub fn random_element<F: Field>(alg: &SuQ2<F>, rng: &mut TestRng, degree: u32, terms: usize) -> Element<F::E> {
    from_pool(alg, rng, &Monomial::all_up_to(degree), terms, true)
}

/// Random element of O(S_q²) of spin degree at most `degree`.
pub fn random_sphere<F: Field>(alg: &SuQ2<F>, rng: &mut TestRng, degree: u32, terms: usize) -> Element<F::E> {
    from_pool(alg, rng, &sphere_monomials(degree), terms, true)
}

/// Random selfadjoint element of O(S_q²) of spin degree at most `degree`.
pub fn random_selfadjoint_sphere<F: Field>(
    alg: &SuQ2<F>,
    rng: &mut TestRng,
    degree: u32,
    terms: usize,
) -> Element<F::E> {
    let x = from_pool(alg, rng, &sphere_monomials(degree), terms, true);
    alg.add(&x, &alg.star(&x))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::Exact;

    #[test]
    fn sphere_pool_matches_word_count() {
        // A^α B^β and A^α B*^γ with α + max(β, γ) ≤ d span the same space
        for d in 0..5u32 {
            let words = (0..=d).map(|a| 1 + 2 * (d - a)).sum::<u32>();
            assert_eq!(sphere_monomials(d).len() as u32, words);
            assert!(sphere_monomials(d).iter().all(|m| m.right_degree() == 0));
        }
    }

    #[test]
    fn seeded_output_is_reproducible() {
        let s = SuQ2::new(Exact::from_ratio(1, 2));
        let x = random_sphere(&s, &mut rng(3), 3, 4);
        let y = random_sphere(&s, &mut rng(3), 3, 4);
        assert_eq!(x, y);
        assert!(x.is_sphere());
        assert!(s.is_selfadjoint(&random_selfadjoint_sphere(&s, &mut rng(5), 2, 3)));
    }
}
